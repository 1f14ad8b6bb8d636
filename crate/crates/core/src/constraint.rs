//! Constraint functions, label vectors and stratification neighbour structure.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite family of smooth functions `q_i : R^n -> R`.
///
/// Implementors may assume `i < n_fcns()` and `x.len() == n_vars()`; the
/// checked entry points are [`evaluate_constraint`] and [`evaluate_gradient`].
pub trait ConstraintSystem: Send + Sync {
    fn n_vars(&self) -> usize;
    fn n_fcns(&self) -> usize;
    fn eval(&self, i: usize, x: &[f64]) -> f64;
    /// Write the gradient of `q_i` into `out`. `out` is zeroed on entry, so
    /// sparse gradients only need to touch their nonzero entries.
    fn grad(&self, i: usize, x: &[f64], out: &mut [f64]);
}

fn check_args(sys: &dyn ConstraintSystem, i: usize, x: &[f64]) -> Result<()> {
    if i >= sys.n_fcns() {
        return Err(Error::IndexOutOfRange { index: i, n_fcns: sys.n_fcns() });
    }
    if x.len() != sys.n_vars() {
        return Err(Error::DimensionMismatch { expected: sys.n_vars(), got: x.len() });
    }
    Ok(())
}

pub fn evaluate_constraint(sys: &dyn ConstraintSystem, i: usize, x: &[f64]) -> Result<f64> {
    check_args(sys, i, x)?;
    Ok(sys.eval(i, x))
}

pub fn evaluate_gradient(sys: &dyn ConstraintSystem, i: usize, x: &[f64]) -> Result<DVector<f64>> {
    check_args(sys, i, x)?;
    let mut g = DVector::zeros(x.len());
    sys.grad(i, x, g.as_mut_slice());
    Ok(g)
}

/// Role of one constraint function within a manifold label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Tag {
    /// Function is ignored.
    None = 0,
    /// `q_i(x) = 0`.
    Eq = 1,
    /// `q_i(x) > 0`.
    In = 2,
}

impl Tag {
    pub fn symbol(self) -> char {
        match self {
            Tag::None => 'N',
            Tag::Eq => 'E',
            Tag::In => 'I',
        }
    }

    fn from_symbol(c: char) -> Option<Tag> {
        match c {
            'N' | 'n' | '0' => Some(Tag::None),
            'E' | 'e' | '1' => Some(Tag::Eq),
            'I' | 'i' | '2' => Some(Tag::In),
            _ => None,
        }
    }
}

/// Whether a constraint can be left on one side only or on both sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

impl Sidedness {
    /// Sidedness implied by the non-EQ tag a constraint takes off the boundary.
    pub fn of_free_tag(tag: Tag) -> Sidedness {
        if tag == Tag::None {
            Sidedness::TwoSided
        } else {
            Sidedness::OneSided
        }
    }
}

/// One tag per constraint function. Identifies a manifold.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelVector(Vec<Tag>);

impl LabelVector {
    pub fn new(tags: Vec<Tag>) -> Self {
        LabelVector(tags)
    }

    pub fn tags(&self) -> &[Tag] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Tag {
        self.0[i]
    }

    pub fn n_eq(&self) -> usize {
        self.0.iter().filter(|&&t| t == Tag::Eq).count()
    }

    pub fn eq_indices(&self) -> Vec<usize> {
        self.indices_of(Tag::Eq)
    }

    pub fn in_indices(&self) -> Vec<usize> {
        self.indices_of(Tag::In)
    }

    fn indices_of(&self, tag: Tag) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &t)| t == tag).map(|(i, _)| i).collect()
    }

    pub fn with_tag(&self, i: usize, tag: Tag) -> LabelVector {
        let mut tags = self.0.clone();
        tags[i] = tag;
        LabelVector(tags)
    }

    /// Canonical string such as `"EEIN"`.
    pub fn canonical(&self) -> String {
        self.0.iter().map(|t| t.symbol()).collect()
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl FromStr for LabelVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| Tag::from_symbol(c).ok_or_else(|| Error::Parse(format!("bad tag {c:?} in label {s:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(LabelVector)
    }
}

/// `(m_L, d_L)`: number of equality constraints and manifold dimension.
pub fn manifold_dims(labels: &LabelVector, n_vars: usize) -> Result<(usize, usize)> {
    let m = labels.n_eq();
    if m > n_vars {
        return Err(Error::InvalidStratification(format!(
            "label {labels} has {m} equality constraints in {n_vars} variables"
        )));
    }
    Ok((m, n_vars - m))
}

/// A manifold one tag away from the current one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Neighbour {
    pub labels: LabelVector,
    /// The constraint whose tag differs.
    pub index: usize,
    /// Sidedness of that constraint off the boundary.
    pub sidedness: Sidedness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixFlag {
    Fix,
    Vary,
}

/// Neighbours precomputed from an explicit list of manifolds.
#[derive(Clone, Debug)]
pub struct ExplicitList {
    labels: Vec<LabelVector>,
    lookup: HashMap<LabelVector, usize>,
    gain: Vec<Vec<Neighbour>>,
    lose: Vec<Vec<Neighbour>>,
}

/// Neighbours generated on demand by flipping tags of varying constraints.
#[derive(Clone, Debug)]
pub struct VaryFlags {
    reference: LabelVector,
    fixed: Vec<bool>,
    two_sided: Vec<bool>,
}

#[derive(Clone, Debug)]
pub enum StratificationSpec {
    Explicit(ExplicitList),
    Vary(VaryFlags),
}

impl StratificationSpec {
    /// Build from a finite list of labels. Two labels are neighbours when they
    /// differ in exactly one tag and one of the two tags there is EQ.
    pub fn explicit(n_fcns: usize, labels: Vec<LabelVector>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidStratification("empty label list".into()));
        }
        let mut lookup = HashMap::new();
        for (k, l) in labels.iter().enumerate() {
            if l.len() != n_fcns {
                return Err(Error::InvalidStratification(format!(
                    "label {l} has {} tags, system has {n_fcns} functions",
                    l.len()
                )));
            }
            if lookup.insert(l.clone(), k).is_some() {
                return Err(Error::InvalidStratification(format!("duplicate label {l}")));
            }
        }
        let mut gain = vec![Vec::new(); labels.len()];
        let mut lose = vec![Vec::new(); labels.len()];
        for (a, la) in labels.iter().enumerate() {
            for lb in &labels {
                let mut diff = la.tags().iter().zip(lb.tags()).enumerate().filter(|(_, (s, t))| s != t);
                let (Some((p, (&ta, &tb))), None) = (diff.next(), diff.next()) else {
                    continue;
                };
                if ta == Tag::Eq {
                    gain[a].push(Neighbour { labels: lb.clone(), index: p, sidedness: Sidedness::of_free_tag(tb) });
                } else if tb == Tag::Eq {
                    lose[a].push(Neighbour { labels: lb.clone(), index: p, sidedness: Sidedness::of_free_tag(ta) });
                }
            }
        }
        Ok(StratificationSpec::Explicit(ExplicitList { labels, lookup, gain, lose }))
    }

    /// Build from per-function FIX/VARY flags. Fixed functions keep the tag
    /// they have in `reference`; a varying function toggles between EQ and IN
    /// (one-sided) or EQ and NONE (two-sided).
    pub fn vary(reference: LabelVector, flags: &[FixFlag], two_sided: &[bool]) -> Result<Self> {
        let n = reference.len();
        if flags.len() != n || two_sided.len() != n {
            return Err(Error::InvalidStratification(format!(
                "flag arrays have lengths {} and {}, label has {n} tags",
                flags.len(),
                two_sided.len()
            )));
        }
        let fixed: Vec<bool> = flags.iter().map(|&f| f == FixFlag::Fix).collect();
        let spec = VaryFlags { reference: reference.clone(), fixed, two_sided: two_sided.to_vec() };
        if !spec.contains(&reference) {
            return Err(Error::InvalidStratification(format!(
                "reference label {reference} uses a tag its sidedness does not allow"
            )));
        }
        Ok(StratificationSpec::Vary(spec))
    }

    pub fn n_fcns(&self) -> usize {
        match self {
            StratificationSpec::Explicit(e) => e.labels[0].len(),
            StratificationSpec::Vary(v) => v.reference.len(),
        }
    }

    pub fn contains(&self, labels: &LabelVector) -> bool {
        match self {
            StratificationSpec::Explicit(e) => e.lookup.contains_key(labels),
            StratificationSpec::Vary(v) => v.contains(labels),
        }
    }

    /// Manifolds of one higher dimension (one EQ tag dropped).
    pub fn gain_neighbours(&self, labels: &LabelVector) -> Vec<Neighbour> {
        match self {
            StratificationSpec::Explicit(e) => e.lookup.get(labels).map(|&k| e.gain[k].clone()).unwrap_or_default(),
            StratificationSpec::Vary(v) => v.gain(labels),
        }
    }

    /// Manifolds of one lower dimension (one EQ tag added).
    pub fn lose_neighbours(&self, labels: &LabelVector) -> Vec<Neighbour> {
        match self {
            StratificationSpec::Explicit(e) => e.lookup.get(labels).map(|&k| e.lose[k].clone()).unwrap_or_default(),
            StratificationSpec::Vary(v) => v.lose(labels),
        }
    }

    /// List index for explicit stratifications, the canonical label otherwise.
    pub fn manifold_id(&self, labels: &LabelVector) -> String {
        match self {
            StratificationSpec::Explicit(e) => match e.lookup.get(labels) {
                Some(k) => k.to_string(),
                None => labels.canonical(),
            },
            StratificationSpec::Vary(_) => labels.canonical(),
        }
    }

    pub fn explicit_labels(&self) -> Option<&[LabelVector]> {
        match self {
            StratificationSpec::Explicit(e) => Some(&e.labels),
            StratificationSpec::Vary(_) => None,
        }
    }
}

impl VaryFlags {
    fn free_tag(&self, i: usize) -> Tag {
        if self.two_sided[i] {
            Tag::None
        } else {
            Tag::In
        }
    }

    fn contains(&self, labels: &LabelVector) -> bool {
        labels.len() == self.reference.len()
            && labels.tags().iter().enumerate().all(|(i, &t)| {
                if self.fixed[i] {
                    t == self.reference.get(i)
                } else {
                    t == Tag::Eq || t == self.free_tag(i)
                }
            })
    }

    fn gain(&self, labels: &LabelVector) -> Vec<Neighbour> {
        (0..labels.len())
            .filter(|&i| !self.fixed[i] && labels.get(i) == Tag::Eq)
            .map(|i| {
                let tag = self.free_tag(i);
                Neighbour { labels: labels.with_tag(i, tag), index: i, sidedness: Sidedness::of_free_tag(tag) }
            })
            .collect()
    }

    fn lose(&self, labels: &LabelVector) -> Vec<Neighbour> {
        (0..labels.len())
            .filter(|&i| !self.fixed[i] && labels.get(i) == self.free_tag(i))
            .map(|i| Neighbour {
                labels: labels.with_tag(i, Tag::Eq),
                index: i,
                sidedness: Sidedness::of_free_tag(labels.get(i)),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Circle;

    impl ConstraintSystem for Circle {
        fn n_vars(&self) -> usize {
            2
        }
        fn n_fcns(&self) -> usize {
            1
        }
        fn eval(&self, _i: usize, x: &[f64]) -> f64 {
            x[0] * x[0] + x[1] * x[1] - 1.0
        }
        fn grad(&self, _i: usize, x: &[f64], out: &mut [f64]) {
            out[0] = 2.0 * x[0];
            out[1] = 2.0 * x[1];
        }
    }

    fn l(s: &str) -> LabelVector {
        s.parse().unwrap()
    }

    #[test]
    fn checked_evaluation_rejects_bad_arguments() {
        assert!(matches!(evaluate_constraint(&Circle, 1, &[0.0, 0.0]), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(evaluate_constraint(&Circle, 0, &[0.0]), Err(Error::DimensionMismatch { .. })));
        assert_eq!(evaluate_constraint(&Circle, 0, &[2.0, 0.0]).unwrap(), 3.0);
        assert_eq!(evaluate_gradient(&Circle, 0, &[2.0, 0.0]).unwrap().as_slice(), &[4.0, 0.0]);
    }

    #[test]
    fn dims_and_canonical_strings() {
        let lab = l("EEIN");
        assert_eq!(lab.canonical(), "EEIN");
        assert_eq!(manifold_dims(&lab, 5).unwrap(), (2, 3));
        assert_eq!(lab.eq_indices(), vec![0, 1]);
        assert_eq!(lab.in_indices(), vec![2]);
        assert!(manifold_dims(&l("EEE"), 2).is_err());
        assert!("EXI".parse::<LabelVector>().is_err());
    }

    #[test]
    fn explicit_neighbours_of_parabola_list() {
        let spec = StratificationSpec::explicit(2, vec![l("II"), l("EI"), l("IE"), l("EE")]).unwrap();
        let gains = spec.gain_neighbours(&l("EE"));
        assert_eq!(gains.len(), 2);
        assert!(gains.iter().all(|n| n.sidedness == Sidedness::OneSided));
        let loses = spec.lose_neighbours(&l("II"));
        let ids: Vec<String> = loses.iter().map(|n| spec.manifold_id(&n.labels)).collect();
        assert_eq!(ids, vec!["1", "2"]);
        assert!(spec.gain_neighbours(&l("II")).is_empty());
        assert!(spec.lose_neighbours(&l("EE")).is_empty());
    }

    #[test]
    fn explicit_two_sided_from_none_tag() {
        let spec = StratificationSpec::explicit(2, vec![l("EN"), l("EE")]).unwrap();
        let g = spec.gain_neighbours(&l("EE"));
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].sidedness, Sidedness::TwoSided);
        assert_eq!(g[0].index, 1);
    }

    #[test]
    fn explicit_rejects_duplicates_and_wrong_lengths() {
        assert!(StratificationSpec::explicit(2, vec![l("EI"), l("EI")]).is_err());
        assert!(StratificationSpec::explicit(2, vec![l("EIE")]).is_err());
    }

    #[test]
    fn vary_flags_respect_fixed_functions() {
        let spec = StratificationSpec::vary(
            l("EIIN"),
            &[FixFlag::Fix, FixFlag::Vary, FixFlag::Vary, FixFlag::Vary],
            &[false, false, false, true],
        )
        .unwrap();
        let lose = spec.lose_neighbours(&l("EIIN"));
        assert_eq!(lose.iter().map(|n| n.labels.canonical()).collect::<Vec<_>>(), vec!["EEIN", "EIEN", "EIIE"]);
        assert_eq!(lose[2].sidedness, Sidedness::TwoSided);
        let gain = spec.gain_neighbours(&l("EEIE"));
        assert_eq!(gain.iter().map(|n| n.labels.canonical()).collect::<Vec<_>>(), vec!["EIIE", "EEIN"]);
        assert!(spec.contains(&l("EEEE")));
        assert!(!spec.contains(&l("IEEE")));
        assert!(!spec.contains(&l("ENEE")));
    }
}
