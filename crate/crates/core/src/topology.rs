//! Simplicial complexes and reduced homology.
//!
//! Used to check the normal Morse data at an M-stationary point with `p - 1`
//! zero coordinates to spare: the `(q-1)`-skeleton of the `(p-1)`-simplex has
//! `C(p-1, q)` independent `(q-1)`-cycles, and attaching the `q`-faces through
//! vertex 1 kills exactly those.
//!
//! Vertices are 1-based. The empty face is always present, so reduced
//! homology includes dimension -1 (nonzero only for the complex with no vertices).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{exact_rank, SparseColumn};
use crate::scalar::{Field, Gf2, Rational};

/// Sorted list of 1-based vertices.
pub type Simplex = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplicialComplex {
    n_vertices: usize,
    /// Inclusion-maximal faces.
    facets: BTreeSet<Simplex>,
    /// Every nonempty face, grouped by dimension.
    faces: Vec<BTreeSet<Simplex>>,
}

impl SimplicialComplex {
    /// Closure of the given simplices. Vertices must lie in `1..=n_vertices`;
    /// empty simplices are ignored.
    pub fn new(n_vertices: usize, simplices: impl IntoIterator<Item = Simplex>) -> Result<Self> {
        let mut faces: Vec<BTreeSet<Simplex>> = Vec::new();
        for mut s in simplices {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                continue;
            }
            if let Some(&v) = s.iter().find(|&&v| v == 0 || v > n_vertices) {
                return Err(Error::InvalidArgument(format!(
                    "vertex {v} outside 1..={n_vertices}"
                )));
            }
            if faces.len() < s.len() {
                faces.resize_with(s.len(), BTreeSet::new);
            }
            if faces[s.len() - 1].contains(&s) {
                continue;
            }
            for k in 1..=s.len() {
                faces[k - 1].extend(s.iter().copied().combinations(k));
            }
        }
        let mut c = Self {
            n_vertices,
            facets: BTreeSet::new(),
            faces,
        };
        c.facets = c.compute_facets();
        Ok(c)
    }

    fn compute_facets(&self) -> BTreeSet<Simplex> {
        let mut out = BTreeSet::new();
        for (d, layer) in self.faces.iter().enumerate() {
            let above = self.faces.get(d + 1);
            for f in layer {
                let covered = above.is_some_and(|up| {
                    (1..=self.n_vertices)
                        .filter(|v| !f.contains(v))
                        .any(|v| {
                            let mut g = f.clone();
                            g.push(v);
                            g.sort_unstable();
                            up.contains(&g)
                        })
                });
                if !covered {
                    out.insert(f.clone());
                }
            }
        }
        out
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn facets(&self) -> impl Iterator<Item = &Simplex> {
        self.facets.iter()
    }

    /// Dimension of the complex; -1 when only the empty face is present.
    pub fn dimension(&self) -> isize {
        self.faces.len() as isize - 1
    }

    /// Nonempty faces of dimension `d`.
    pub fn faces_of_dim(&self, d: usize) -> impl Iterator<Item = &Simplex> {
        self.faces.get(d).into_iter().flatten()
    }

    /// `f_0, f_1, ...`
    pub fn face_counts(&self) -> Vec<usize> {
        self.faces.iter().map(|l| l.len()).collect()
    }

    pub fn contains(&self, s: &[usize]) -> bool {
        s.is_empty() || self.faces.get(s.len() - 1).is_some_and(|l| l.contains(s))
    }

    pub fn union(&self, other: &Self) -> Self {
        let n = self.n_vertices.max(other.n_vertices);
        Self::new(n, self.facets.iter().chain(&other.facets).cloned()).expect("vertices in range")
    }

    /// Alternating sum of face counts over nonempty faces.
    pub fn euler_characteristic(&self) -> i64 {
        self.face_counts()
            .iter()
            .enumerate()
            .map(|(d, &c)| if d % 2 == 0 { c as i64 } else { -(c as i64) })
            .sum()
    }

    /// One facet per line, vertices separated by spaces.
    pub fn to_facet_text(&self) -> String {
        let mut out = String::new();
        for f in &self.facets {
            let _ = writeln!(out, "{}", f.iter().join(" "));
        }
        out
    }

    /// Inverse of [`Self::to_facet_text`]. Blank lines and `#` comments are
    /// skipped; the vertex count defaults to the largest vertex seen.
    pub fn from_facet_text(text: &str, n_vertices: Option<usize>) -> Result<Self> {
        let mut simplices = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let s: Simplex = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| {
                        Error::InvalidArgument(format!("line {}: bad vertex {t:?}", ln + 1))
                    })
                })
                .collect::<Result<_>>()?;
            simplices.push(s);
        }
        let n = n_vertices.unwrap_or_else(|| simplices.iter().flatten().copied().max().unwrap_or(0));
        Self::new(n, simplices)
    }
}

/// Reduced Betti numbers and Euler characteristic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiProfile {
    /// Rank of reduced homology in dimension -1.
    pub reduced_betti_minus_one: usize,
    /// Ranks of reduced homology in dimensions `0..=dim`.
    pub reduced_betti: Vec<usize>,
    pub euler_characteristic: i64,
}

impl BettiProfile {
    pub fn reduced(&self, d: isize) -> usize {
        match d {
            -1 => self.reduced_betti_minus_one,
            d if d >= 0 => self.reduced_betti.get(d as usize).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.reduced_betti_minus_one == 0 && self.reduced_betti.iter().all(|&b| b == 0)
    }

    /// `1 + sum_{d >= -1} (-1)^d b~_d`
    pub fn alternating_sum(&self) -> i64 {
        let mut acc = 1 - self.reduced_betti_minus_one as i64;
        for (d, &b) in self.reduced_betti.iter().enumerate() {
            acc += if d % 2 == 0 { b as i64 } else { -(b as i64) };
        }
        acc
    }
}

/// Rank of the boundary map from dimension `d` to `d - 1` (`d = 0` is the augmentation).
fn boundary_rank<T: Field>(c: &SimplicialComplex, d: usize) -> usize {
    let Some(layer) = c.faces.get(d) else {
        return 0;
    };
    if d == 0 {
        return usize::from(!layer.is_empty());
    }
    let index: BTreeMap<&Simplex, usize> = c.faces[d - 1].iter().zip(0..).collect();
    let cols: Vec<SparseColumn<T>> = layer
        .iter()
        .map(|s| {
            (0..s.len())
                .map(|k| {
                    let mut face = s.clone();
                    face.remove(k);
                    let sign = if k % 2 == 0 { T::one() } else { -T::one() };
                    (index[&face], sign)
                })
                .collect()
        })
        .collect();
    exact_rank(cols)
}

/// Reduced Betti numbers over the field `T`.
pub fn betti_over<T: Field>(c: &SimplicialComplex) -> BettiProfile {
    let top = c.faces.len();
    let ranks: Vec<usize> = (0..=top).map(|d| boundary_rank::<T>(c, d)).collect();
    let f = c.face_counts();
    let minus_one = 1 - ranks[0];
    let reduced = (0..top).map(|d| f[d] - ranks[d] - ranks[d + 1]).collect();
    BettiProfile {
        reduced_betti_minus_one: minus_one,
        reduced_betti: reduced,
        euler_characteristic: c.euler_characteristic(),
    }
}

/// Reduced Betti numbers over the rationals.
pub fn betti(c: &SimplicialComplex) -> BettiProfile {
    betti_over::<Rational>(c)
}

/// All faces of dimension at most `dim` of the simplex on vertices `1..=p`.
pub fn simplex_skeleton(p: usize, dim: isize) -> Result<SimplicialComplex> {
    if p == 0 {
        return Err(Error::InvalidArgument("simplex needs at least one vertex".into()));
    }
    if dim < -1 || dim > p as isize - 1 {
        return Err(Error::InvalidArgument(format!(
            "skeleton dimension {dim} outside -1..={}",
            p - 1
        )));
    }
    let top: Vec<Simplex> = if dim < 0 {
        Vec::new()
    } else {
        (1..=p).combinations(dim as usize + 1).collect()
    };
    SimplicialComplex::new(p, top)
}

/// The `(q+1)`-subsets of `1..=p` containing vertex 1; there are `C(p-1, q)`.
pub fn attached_cell_family(p: usize, q: usize) -> Result<Vec<Simplex>> {
    if q >= p {
        return Err(Error::InvalidArgument(format!("need q < p, got p = {p}, q = {q}")));
    }
    Ok((2..=p)
        .combinations(q)
        .map(|rest| std::iter::once(1).chain(rest).collect())
        .collect())
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Greedy elementary collapses; true if the complex shrinks to one vertex.
pub fn greedy_collapse(c: &SimplicialComplex) -> bool {
    let mut faces: BTreeSet<Simplex> = c.faces.iter().flatten().cloned().collect();
    if faces.is_empty() {
        return false;
    }
    loop {
        if faces.len() == 1 {
            return true;
        }
        let mut step = None;
        'search: for s in &faces {
            let cofaces: Vec<&Simplex> = faces
                .iter()
                .filter(|t| t.len() == s.len() + 1 && s.iter().all(|v| t.contains(v)))
                .take(2)
                .collect();
            if cofaces.len() == 1 {
                // a free face: its unique coface must be maximal
                let t = cofaces[0];
                let t_maximal = !faces
                    .iter()
                    .any(|u| u.len() == t.len() + 1 && t.iter().all(|v| u.contains(v)));
                if t_maximal {
                    step = Some((s.clone(), t.clone()));
                    break 'search;
                }
            }
        }
        match step {
            Some((s, t)) => {
                faces.remove(&s);
                faces.remove(&t);
            }
            None => return false,
        }
    }
}

/// Outcome of the normal Morse data check for one `(p, q)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalMorseReport {
    pub p: usize,
    pub q: usize,
    /// Number of attached `q`-cells.
    pub cells: usize,
    /// `C(p-1, q)`.
    pub expected: usize,
    /// Rank of reduced `H_{q-1}` of the `(q-1)`-skeleton.
    pub skeleton_rank: usize,
    pub skeleton_betti: BettiProfile,
    pub union_betti: BettiProfile,
    pub count_ok: bool,
    /// The skeleton with the attached cells is acyclic.
    pub contractible_ok: bool,
    /// Dropping any single attached cell leaves nonzero homology.
    pub minimal_ok: bool,
    /// The union collapses greedily to a point.
    pub collapsible: bool,
    /// Characteristic 0 and characteristic 2 ranks agree on every complex built.
    pub char2_agrees: bool,
}

impl NormalMorseReport {
    pub fn all_ok(&self) -> bool {
        self.count_ok && self.contractible_ok && self.minimal_ok
    }
}

pub fn verify_normal_morse_data(p: usize, q: usize) -> Result<NormalMorseReport> {
    let family = attached_cell_family(p, q)?;
    let expected = binomial(p - 1, q);
    let skeleton = simplex_skeleton(p, q as isize - 1)?;
    let skeleton_betti = betti(&skeleton);
    let skeleton_rank = skeleton_betti.reduced(q as isize - 1);
    let with_cells = |cells: &[Simplex]| {
        SimplicialComplex::new(p, skeleton.facets().cloned().chain(cells.iter().cloned()))
            .expect("vertices in range")
    };
    let union = with_cells(&family);
    let union_betti = betti(&union);
    let minimal_ok = (0..family.len()).all(|drop| {
        let rest: Vec<Simplex> = family
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != drop)
            .map(|(_, c)| c.clone())
            .collect();
        let b = betti(&with_cells(&rest));
        b.reduced(q as isize) != 0 || b.reduced(q as isize - 1) != 0
    });
    let char2_agrees = betti_over::<Gf2>(&skeleton) == skeleton_betti && betti_over::<Gf2>(&union) == union_betti;
    Ok(NormalMorseReport {
        p,
        q,
        cells: family.len(),
        expected,
        skeleton_rank,
        count_ok: family.len() == expected && skeleton_rank == expected,
        contractible_ok: union_betti.is_acyclic(),
        minimal_ok,
        collapsible: greedy_collapse(&union),
        char2_agrees,
        skeleton_betti,
        union_betti,
    })
}

/// [`verify_normal_morse_data`] for every `1 <= p <= p_max`, `0 <= q < p`,
/// ordered by `(p, q)`.
pub fn normal_morse_sweep(p_max: usize) -> Result<Vec<NormalMorseReport>> {
    let pairs: Vec<(usize, usize)> = (1..=p_max).flat_map(|p| (0..p).map(move |q| (p, q))).collect();
    pairs
        .par_iter()
        .map(|&(p, q)| verify_normal_morse_data(p, q))
        .collect()
}
