//! Classical and E-shifted Conley indices, E-dimensions of coordinate
//! subspaces, and E-cohomology of level families through Mayer–Vietoris
//! connecting maps.
//!
//! At a fixed truncation the E-index is the classical index re-graded by
//! `q = k − d⁻`. The limit machinery is exercised on explicitly supplied
//! level families `X_{V₀} ⊂ X_{V₁} ⊂ …`, where `X_{Vᵢ}` is the slice of
//! `X_{Vᵢ₊₁}` by the hyperplane of the new coordinate.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::isolation::{build_index_pair, GridBox, IndexPairCombinatorial};
use crate::ls_system::{LSField, SplitModel};
use crate::z2_chain::{homology_dims, relative_pair_complex, CubicalSet, GradedDims, MvTriad, Z2Matrix};

/// Relative Z₂ homology of `(N, L)`.
pub fn classical_index(pair: &IndexPairCombinatorial) -> Result<GradedDims> {
    let c = relative_pair_complex(&pair.n.to_cubical(), &pair.l.to_cubical())?;
    homology_dims(&c)
}

/// E-graded index table; degree `q` holds classical degree `q + d⁻`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EIndex {
    pub dims: GradedDims,
    pub d_minus: usize,
}

impl EIndex {
    /// Stored with offset `−d⁻`, so index `i` of `dims.dims` is classical degree `i`.
    pub fn from_classical(classical: &GradedDims, d_minus: usize) -> Self {
        let top = classical.nonzero().last().map_or(0, |&(k, _)| k.max(0) as usize);
        let dims = (0..=top).map(|k| classical.get(k as i64)).collect();
        Self { dims: GradedDims::new(-(d_minus as i64), dims), d_minus }
    }

    pub fn is_zero(&self) -> bool {
        self.dims.is_zero()
    }
}

pub fn e_index(pair: &IndexPairCombinatorial, model: &SplitModel) -> Result<EIndex> {
    Ok(EIndex::from_classical(&classical_index(pair)?, model.d_minus()))
}

/// Nonzero index means a nonempty invariant set.
pub fn nontriviality_check(e: &EIndex) -> bool {
    !e.is_zero()
}

/// `dim(V ∩ E⁺) − codim(V + E⁺)` for `V` spanned by the given coordinates.
pub fn e_dimension(v: &[usize], model: &SplitModel) -> Result<i64> {
    if let Some(&i) = v.iter().find(|&&i| i >= model.dim()) {
        return Err(Error::InvalidArgument(format!("coordinate {i} outside the model")));
    }
    let plus = v.iter().filter(|&&i| model.spectrum()[i] > 0.0).count() as i64;
    let missing_minus = model.minus_set().iter().filter(|i| !v.contains(i)).count() as i64;
    Ok(plus - missing_minus)
}

/// Cubical sets `X_{V}` at consecutive `dim V`, with the coordinate that is
/// added between consecutive levels.
#[derive(Clone, Debug)]
pub struct LevelFamily {
    pub levels: Vec<(usize, CubicalSet)>,
    pub axes: Vec<usize>,
}

impl LevelFamily {
    pub fn new(levels: Vec<(usize, CubicalSet)>, axes: Vec<usize>) -> Result<Self> {
        if levels.len() < 2 || axes.len() + 1 != levels.len() {
            return Err(Error::LevelFamily(format!(
                "{} levels need {} orientation axes, got {}",
                levels.len(),
                levels.len().saturating_sub(1),
                axes.len()
            )));
        }
        if levels.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
            return Err(Error::LevelFamily("consecutive levels must differ by one dimension".into()));
        }
        let ambient = levels[0].1.ambient_dim();
        if levels.iter().any(|(_, x)| x.ambient_dim() != ambient) {
            return Err(Error::LevelFamily("levels live in different ambient spaces".into()));
        }
        Ok(Self { levels, axes })
    }

    /// Unit-box spheres for E-dimension `p`: `p` coordinates of `E⁺` plus `v`
    /// coordinates of `V ⊂ E⁻`, with `v` running over three consecutive
    /// values (starting at 1 when `p = 0` so the first level is nonempty).
    pub fn sphere_family(p: usize) -> Self {
        let v0 = usize::from(p == 0);
        let ambient = p + v0 + 2;
        let levels = (v0..v0 + 3).map(|v| (v, CubicalSet::box_sphere(p + v, ambient))).collect();
        let axes = (v0..v0 + 2).map(|v| p + v).collect();
        Self::new(levels, axes).expect("sphere families are well-formed")
    }

    /// `levels` empty levels in `R^ambient`.
    pub fn empty(ambient: usize, levels: usize) -> Self {
        let sets = (0..levels).map(|v| (v, CubicalSet::empty(ambient))).collect();
        Self::new(sets, vec![0; levels.saturating_sub(1)]).expect("well-formed")
    }
}

/// Per-level data and the limit table of an E-cohomology computation.
#[derive(Clone, Debug, PartialEq)]
pub struct EDimensionRecord {
    pub p: Option<i64>,
    /// `(dim V, cohomology dims of X_V)` per level.
    pub level_dims: Vec<(usize, GradedDims)>,
    /// For each `q`, the rank of the composite map from each level but the
    /// last into the top level.
    pub composite_ranks: BTreeMap<i64, Vec<usize>>,
    pub limit: GradedDims,
    pub exactness_ok: bool,
    pub flipped_orientation_agrees: bool,
}

/// Direct-limit dimensions of `H^{q + dim V}(X_V)` along the connecting maps.
///
/// The limit in degree `q` is the rank of the composite image into the top
/// level, accepted only if it agrees for the two levels below the top.
pub fn e_cohomology_limit(fam: &LevelFamily) -> Result<EDimensionRecord> {
    if fam.levels.len() < 3 {
        return Err(Error::LevelFamily("at least three levels are needed".into()));
    }
    let run = |flipped: bool| -> Result<(BTreeMap<i64, Vec<usize>>, bool)> {
        let mut triads = Vec::new();
        for (i, &axis) in fam.axes.iter().enumerate() {
            let triad = MvTriad::new(&fam.levels[i + 1].1, axis, flipped)?;
            if triad.middle != fam.levels[i].1 {
                return Err(Error::LevelFamily(format!(
                    "level {i} is not the slice of level {} along axis {axis}",
                    i + 1
                )));
            }
            triads.push(triad);
        }
        let exact = triads.iter().all(|t| t.exactness_all().iter().all(|row| row.holds()));
        let ambient = fam.levels[0].1.ambient_dim() as i64;
        let v_first = fam.levels[0].0 as i64;
        let v_top = fam.levels.last().expect("levels").0 as i64;
        let mut ranks = BTreeMap::new();
        for q in -v_top..=ambient - v_first {
            let mut per_level = Vec::new();
            for start in 0..triads.len() {
                per_level.push(composite_rank(fam, &triads, start, q));
            }
            ranks.insert(q, per_level);
        }
        Ok((ranks, exact))
    };
    let (ranks, exact) = run(false)?;
    let (flipped_ranks, _) = run(true)?;

    let mut limit = BTreeMap::new();
    let mut unstable = Vec::new();
    for (&q, r) in &ranks {
        let n = r.len();
        let (a, b) = (r[n.saturating_sub(2)], r[n - 1]);
        if a != b {
            unstable.push(q);
        } else if b > 0 {
            limit.insert(q, b);
        }
    }
    if !unstable.is_empty() {
        return Err(Error::NoPlateau { degrees: unstable });
    }
    let level_dims = fam
        .levels
        .iter()
        .map(|(v, x)| -> Result<(usize, GradedDims)> {
            let cx = crate::z2_chain::cubical_complex(x)?;
            Ok((*v, cx.complex.cohomology_dims()))
        })
        .collect::<Result<_>>()?;
    Ok(EDimensionRecord {
        p: None,
        level_dims,
        composite_ranks: ranks.clone(),
        limit: GradedDims::from_map(&limit),
        exactness_ok: exact,
        flipped_orientation_agrees: flipped_ranks == ranks,
    })
}

/// Rank of `H^{q + v_start}(X_start) → … → H^{q + v_top}(X_top)`.
fn composite_rank(fam: &LevelFamily, triads: &[MvTriad], start: usize, q: i64) -> usize {
    let k0 = q + fam.levels[start].0 as i64;
    if k0 < 0 {
        return 0;
    }
    let mut k = k0 as usize;
    let mut acc: Option<Z2Matrix> = None;
    for triad in &triads[start..] {
        let src = triad.middle_basis(k);
        let dst = triad.whole_basis(k + 1);
        let delta = triad.connecting_in(&src, &dst);
        acc = Some(match acc {
            None => delta,
            Some(m) => delta.mul(&m),
        });
        k += 1;
    }
    acc.map_or(0, |m| m.rank())
}

/// The field on one more coordinate `y` with `ẏ = y`, spectrum entry `−1`
/// (a new `E⁻` direction that is unstable for the flow), and `K` unchanged
/// on the old coordinates.
pub fn suspend_field(f: &LSField) -> Result<LSField> {
    let model = f.model().appended(-1.0)?;
    let d = f.dim();
    let base = f.clone();
    let mut linear = f.linear_part().to_vec();
    linear.push(1.0);
    let mut out = LSField::new(
        model,
        Arc::new(move |x, o| {
            base.nonlinearity_into(&x[..d], &mut o[..d]);
            o[d] = 0.0;
        }),
    )
    .with_linear_part(linear);
    if let Some(n) = f.support_level() {
        out = out.with_support_level(n);
    }
    Ok(out)
}

/// Grid on `U × [−1, 1]` with `extra` cells on the new axis.
pub fn suspend_grid(u: &GridBox, extra: usize) -> GridBox {
    let mut g = u.clone();
    g.lower.push(-1.0);
    g.upper.push(1.0);
    g.subdivisions.push(extra);
    g
}

/// Indices of a system and of its suspension.
#[derive(Clone, Debug, PartialEq)]
pub struct SuspensionReport {
    pub classical: GradedDims,
    pub suspended_classical: GradedDims,
    pub e_dims: EIndex,
    pub suspended_e_dims: EIndex,
}

impl SuspensionReport {
    pub fn classical_shifted_by_one(&self) -> bool {
        self.suspended_classical == self.classical.shifted(1)
    }

    pub fn e_tables_equal(&self) -> bool {
        self.e_dims.dims == self.suspended_e_dims.dims
    }

    pub fn holds(&self) -> bool {
        self.classical_shifted_by_one() && self.e_tables_equal()
    }
}

/// Builds the index pair of `F` on `U` and of its suspension on
/// `U × [−1, 1]` (with `extra` cells on the new axis) at the same horizon.
pub fn suspension_check(f: &LSField, u: &GridBox, t: f64, step: f64, extra: usize) -> Result<SuspensionReport> {
    let pair = build_index_pair(f, u, Some(t), step)?;
    let classical = classical_index(&pair)?;
    let sf = suspend_field(f)?;
    let spair = build_index_pair(&sf, &suspend_grid(u, extra), Some(t), step)?;
    let suspended_classical = classical_index(&spair)?;
    Ok(SuspensionReport {
        e_dims: EIndex::from_classical(&classical, f.model().d_minus()),
        suspended_e_dims: EIndex::from_classical(&suspended_classical, sf.model().d_minus()),
        classical,
        suspended_classical,
    })
}
