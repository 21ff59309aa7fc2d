use std::fmt;
use std::sync::Arc;

/// Ordered, labelled basis of a finite Hilbert space.
///
/// Labels are computed on demand from the basis shape, so a rotor basis of
/// dimension 2·10⁴+1 costs nothing to carry around.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Angular-momentum eigenstates `|l_z = m⟩`, `m = -cutoff..=cutoff`.
    AngularMomentum { cutoff: usize },
    /// Spin-½ product basis in σ_z; bit `i` of the index set means site `i`
    /// is down. Site 0 is the most significant bit.
    Spins { sites: usize },
    /// Unnamed states `0..dim`.
    Indexed { dim: usize },
    /// Kronecker product; the left factor's index varies slowest.
    Product(Arc<Basis>, Arc<Basis>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BasisLabel {
    Lz(i64),
    /// `true` = down, site 0 first.
    Spins(Vec<bool>),
    Index(usize),
    Product(Box<BasisLabel>, Box<BasisLabel>),
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::AngularMomentum { cutoff } => 2 * cutoff + 1,
            Basis::Spins { sites } => 1usize << sites,
            Basis::Indexed { dim } => *dim,
            Basis::Product(a, b) => a.dim() * b.dim(),
        }
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        assert!(index < self.dim(), "basis index {index} out of range");
        match self {
            Basis::AngularMomentum { cutoff } => BasisLabel::Lz(index as i64 - *cutoff as i64),
            Basis::Spins { sites } => BasisLabel::Spins(
                (0..*sites).map(|s| index >> (sites - 1 - s) & 1 == 1).collect(),
            ),
            Basis::Indexed { .. } => BasisLabel::Index(index),
            Basis::Product(a, b) => {
                let db = b.dim();
                BasisLabel::Product(Box::new(a.label(index / db)), Box::new(b.label(index % db)))
            }
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.dim()).map(move |i| self.label(i))
    }

    /// Index of `|l_z = m⟩` in an angular-momentum basis.
    pub fn lz_index(&self, m: i64) -> Option<usize> {
        match self {
            Basis::AngularMomentum { cutoff } => {
                let c = *cutoff as i64;
                (-c..=c).contains(&m).then(|| (m + c) as usize)
            }
            _ => None,
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::Lz(m) => write!(f, "m={m}"),
            BasisLabel::Spins(s) => {
                for &down in s {
                    f.write_str(if down { "d" } else { "u" })?;
                }
                Ok(())
            }
            BasisLabel::Index(i) => write!(f, "{i}"),
            BasisLabel::Product(a, b) => write!(f, "{a}⊗{b}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotor_labels_run_from_minus_cutoff() {
        let b = Basis::AngularMomentum { cutoff: 2 };
        let labels: Vec<_> = b.labels().collect();
        assert_eq!(labels.first(), Some(&BasisLabel::Lz(-2)));
        assert_eq!(labels.last(), Some(&BasisLabel::Lz(2)));
        assert_eq!(b.lz_index(0), Some(2));
        assert_eq!(b.lz_index(3), None);
    }

    #[test]
    fn spin_labels_are_msb_first() {
        let b = Basis::Spins { sites: 3 };
        assert_eq!(b.label(0b100).to_string(), "duu");
    }

    #[test]
    fn product_label_splits_left_major() {
        let b = Basis::Product(
            Arc::new(Basis::Indexed { dim: 2 }),
            Arc::new(Basis::Indexed { dim: 3 }),
        );
        assert_eq!(b.dim(), 6);
        assert_eq!(b.label(4).to_string(), "1⊗1");
    }
}
