//! Lower bounds on word norms from the cocycle, and a brute-force word
//! ball to compare them with.
//!
//! With `m` the largest oscillation of `K` over the generators, the cocycle
//! identity makes `K` `m`-Lipschitz for the word norm, so for fixed points
//! `x`, `y` of `f` one gets `|fⁿ| ≥ n·|P_{x,y}(f)|/m`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cocycle::{cocycle_by_path, GridFunction, GridSpec, PathSettings};
use crate::dynamics::{compose, Diffeo, GeneratorTable, GroupWord, Letter};
use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, Point, Primitive, Window};
use crate::invariants::polterovich_along_segment;

/// Probe images are compared at this resolution.
pub const QUANTUM: f64 = 1e-6;
/// Two maps whose probe images differ by less than this are considered equal.
pub const MATCH_TOL: f64 = 2e-6;
/// Largest admissible BFS radius.
pub const MAX_RADIUS: usize = 8;
pub const DEFAULT_RADIUS: usize = 6;
/// `|P|` at or below this makes the bound vacuous.
pub const DEGENERATE_P: f64 = 1e-6;

/// Named generators with their cocycles.
#[derive(Clone)]
pub struct GeneratorSet {
    names: Vec<String>,
    maps: Vec<Arc<dyn Diffeo>>,
    cocycles: Vec<GridFunction>,
    alpha: Primitive,
    model: ManifoldModel,
    m: f64,
}

impl GeneratorSet {
    /// Uses the given cocycles, which must share one grid.
    pub fn new(
        model: ManifoldModel,
        alpha: Primitive,
        generators: Vec<(String, Arc<dyn Diffeo>, GridFunction)>,
    ) -> Result<GeneratorSet> {
        if let Some((_, _, k0)) = generators.first() {
            if let Some((name, _, _)) = generators.iter().find(|g| g.2.spec() != k0.spec()) {
                return Err(Error::GridMismatch(format!("cocycle of `{name}` lives on a different grid")));
            }
        }
        let m = generators.iter().map(|g| g.2.oscillation()).fold(0.0, f64::max);
        let mut names = Vec::new();
        let mut maps = Vec::new();
        let mut cocycles = Vec::new();
        for (n, f, k) in generators {
            names.push(n);
            maps.push(f);
            cocycles.push(k);
        }
        Ok(GeneratorSet { names, maps, cocycles, alpha, model, m })
    }

    /// Computes every cocycle by path integration on `grid`.
    pub fn compute(
        table: &GeneratorTable,
        alpha: &Primitive,
        model: &ManifoldModel,
        grid: &GridSpec,
        settings: PathSettings,
    ) -> Result<GeneratorSet> {
        let gens = table
            .iter()
            .map(|(name, f)| {
                let k = cocycle_by_path(f.as_ref(), alpha, model, None, grid, settings)?;
                Ok((name.clone(), Arc::clone(f), k))
            })
            .collect::<Result<Vec<_>>>()?;
        GeneratorSet::new(*model, alpha.clone(), gens)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cocycles(&self) -> &[GridFunction] {
        &self.cocycles
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn alpha(&self) -> &Primitive {
        &self.alpha
    }

    pub fn table(&self) -> GeneratorTable {
        self.names.iter().cloned().zip(self.maps.iter().cloned()).collect()
    }

    /// `max_i osc(K(g_i))`.
    pub fn m(&self) -> f64 {
        self.m
    }

    fn letters(&self) -> Vec<(Letter, usize)> {
        (0..self.names.len())
            .flat_map(|k| [(Letter::new(&self.names[k], false), k), (Letter::new(&self.names[k], true), k)])
            .collect()
    }

    fn act(&self, letter: &Letter, k: usize, x: Point) -> Result<Point> {
        if letter.inverse {
            self.maps[k].apply_inverse(x)
        } else {
            self.maps[k].apply(x)
        }
    }
}

pub fn lipschitz_constant(gens: &GeneratorSet) -> f64 {
    gens.m()
}

/// `n ↦ n·|P|/m` for one word and one pair of fixed points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionBound {
    pub p_value: f64,
    pub m: f64,
}

impl DistortionBound {
    pub fn at(&self, n: u64) -> f64 {
        n as f64 * (self.p_value.abs() / self.m)
    }
}

/// `|P_{x,y}(f)|/m` for the word `f`, with `P` integrated along the segment
/// from `y` to `x`.
pub fn bound_per_step(gens: &GeneratorSet, word: &GroupWord, x: Point, y: Point, tol: f64) -> Result<DistortionBound> {
    if gens.m() == 0.0 {
        return Err(Error::DegenerateGenerators);
    }
    let f = compose(word, &gens.table())?;
    let p_value = polterovich_along_segment(&f, &gens.alpha, &gens.model, x, y, tol)?;
    if p_value.abs() <= DEGENERATE_P {
        return Err(Error::DegenerateBound { value: p_value.abs() });
    }
    Ok(DistortionBound { p_value, m: gens.m() })
}

/// `n·|P_{x,y}(f)|/m`, a lower bound for the word norm of `fⁿ`.
pub fn distortion_lower_bound(gens: &GeneratorSet, word: &GroupWord, x: Point, y: Point, n: u64, tol: f64) -> Result<f64> {
    Ok(bound_per_step(gens, word, x, y, tol)?.at(n))
}

/// Quasi-random probe points: a Halton sequence (bases 2 and 3) with a
/// random shift modulo the window drawn from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub points: Vec<Point>,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    r
}

impl ProbeSet {
    /// Points `first..first + count` of the shifted sequence.
    pub fn halton(window: &Window, first: u64, count: usize, seed: u64) -> ProbeSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (sp, sq): (f64, f64) = (rng.gen(), rng.gen());
        let points = (0..count as u64)
            .map(|k| {
                let i = first + k + 1;
                let u = (radical_inverse(i, 2) + sp).fract();
                let v = (radical_inverse(i, 3) + sq).fract();
                Point::new(window.p_min + u * window.width(), window.q_min + v * window.height())
            })
            .collect();
        ProbeSet { points }
    }

    /// The default 40 primary and 200 secondary probes.
    pub fn default_pair(window: &Window, seed: u64) -> (ProbeSet, ProbeSet) {
        (ProbeSet::halton(window, 0, 40, seed), ProbeSet::halton(window, 40, 200, seed))
    }
}

/// Probe images, compared through their quantized values.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    images: Vec<Point>,
}

impl Fingerprint {
    pub fn of(f: &dyn Diffeo, model: &ManifoldModel, probes: &ProbeSet) -> Result<Fingerprint> {
        let images = probes.points.iter().map(|&x| Ok(model.wrap(f.apply(x)?))).collect::<Result<_>>()?;
        Ok(Fingerprint { images })
    }

    pub fn images(&self) -> &[Point] {
        &self.images
    }

    /// Hash key: images rounded to multiples of [`QUANTUM`].
    pub fn key(&self) -> Vec<(i64, i64)> {
        self.images.iter().map(|x| ((x.p / QUANTUM).round() as i64, (x.q / QUANTUM).round() as i64)).collect()
    }

    /// Largest probe distance, measured on the model.
    pub fn gap(&self, other: &Fingerprint, model: &ManifoldModel) -> f64 {
        self.images
            .iter()
            .zip(&other.images)
            .map(|(a, b)| model.displacement(*a, *b).max_abs())
            .fold(0.0, f64::max)
    }
}

/// Two words of different lengths with equal fingerprints that disagree on
/// the secondary probes.
#[derive(Debug, Clone, PartialEq)]
pub struct Collision {
    pub kept: GroupWord,
    pub colliding: GroupWord,
    pub secondary_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordBall {
    /// Least word length matching each target, `None` when not found within the radius.
    pub norms: Vec<Option<usize>>,
    /// A shortest matching word per target.
    pub words: Vec<Option<GroupWord>>,
    /// Distinct fingerprints visited.
    pub explored: usize,
    pub collisions: Vec<Collision>,
}

/// Breadth-first search over freely reduced words in the generators and
/// their inverses, one radius at a time, merging words with equal
/// fingerprints. Every target gets the length of the first word whose
/// probe images match it within [`MATCH_TOL`].
pub fn word_ball_norms(
    gens: &GeneratorSet,
    targets: &[&dyn Diffeo],
    radius_cap: usize,
    probes: &ProbeSet,
    secondary: &ProbeSet,
) -> Result<WordBall> {
    if radius_cap > MAX_RADIUS {
        return Err(Error::RadiusCapTooLarge(radius_cap));
    }
    let model = gens.model;
    let target_prints = targets.iter().map(|t| Fingerprint::of(*t, &model, probes)).collect::<Result<Vec<_>>>()?;
    let mut norms = vec![None; targets.len()];
    let mut words = vec![None; targets.len()];
    let mut collisions = Vec::new();
    let letters = gens.letters();
    let table = gens.table();

    let start = Fingerprint { images: probes.points.iter().map(|&x| model.wrap(x)).collect() };
    let mut seen: HashMap<Vec<(i64, i64)>, (usize, GroupWord)> = HashMap::new();
    seen.insert(start.key(), (0, GroupWord::identity()));
    let mut frontier = vec![(GroupWord::identity(), probes.points.clone(), start)];

    let record = |radius: usize, word: &GroupWord, print: &Fingerprint, norms: &mut Vec<Option<usize>>, words: &mut Vec<Option<GroupWord>>| {
        for (k, t) in target_prints.iter().enumerate() {
            if norms[k].is_none() && print.gap(t, &model) < MATCH_TOL {
                norms[k] = Some(radius);
                words[k] = Some(word.clone());
            }
        }
    };
    record(0, &GroupWord::identity(), &frontier[0].2, &mut norms, &mut words);

    for radius in 1..=radius_cap {
        if norms.iter().all(Option::is_some) {
            break;
        }
        let expansions: Vec<(GroupWord, Vec<Point>, Fingerprint)> = frontier
            .par_iter()
            .flat_map_iter(|(word, images, _)| {
                let last = word.letters.last().cloned();
                letters
                    .iter()
                    .filter(move |(l, _)| last.as_ref() != Some(&l.inverted()))
                    .map(move |(l, k)| -> Result<(GroupWord, Vec<Point>, Fingerprint)> {
                        let next = images.iter().map(|&x| gens.act(l, *k, x)).collect::<Result<Vec<_>>>()?;
                        let print = Fingerprint { images: next.iter().map(|&x| model.wrap(x)).collect() };
                        let mut w = word.clone();
                        w.letters.push(l.clone());
                        Ok((w, next, print))
                    })
            })
            .collect::<Result<_>>()?;
        let mut next_frontier = Vec::new();
        for (word, images, print) in expansions {
            record(radius, &word, &print, &mut norms, &mut words);
            let key = print.key();
            match seen.get(&key) {
                None => {
                    seen.insert(key, (radius, word.clone()));
                    next_frontier.push((word, images, print));
                }
                Some((len, _)) if *len == radius => {}
                Some((_, earlier)) => {
                    let a = compose(earlier, &table)?;
                    let b = compose(&word, &table)?;
                    let gap = Fingerprint::of(&a, &model, secondary)?.gap(&Fingerprint::of(&b, &model, secondary)?, &model);
                    if gap >= MATCH_TOL {
                        log::warn!("word_ball_norm: `{word}` and `{earlier}` share a fingerprint but differ by {gap:e} on the secondary probes");
                        collisions.push(Collision { kept: earlier.clone(), colliding: word.clone(), secondary_gap: gap });
                        next_frontier.push((word, images, print));
                    }
                }
            }
        }
        frontier = next_frontier;
    }
    Ok(WordBall { norms, words, explored: seen.len(), collisions })
}

/// The word norm of a single target, `None` when it exceeds `radius_cap`.
pub fn word_ball_norm(
    gens: &GeneratorSet,
    target: &dyn Diffeo,
    radius_cap: usize,
    probes: &ProbeSet,
    secondary: &ProbeSet,
) -> Result<(Option<usize>, Vec<Collision>)> {
    let ball = word_ball_norms(gens, &[target], radius_cap, probes, secondary)?;
    Ok((ball.norms[0], ball.collisions))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionRow {
    pub n: u64,
    pub bound: f64,
    pub empirical_norm: Option<usize>,
}

impl DistortionRow {
    pub fn ratio(&self) -> Option<f64> {
        self.empirical_norm.filter(|&k| k > 0).map(|k| self.bound / k as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSettings {
    pub n_max: u64,
    pub radius_cap: usize,
    /// Seed of the probe shift.
    pub seed: u64,
    /// Tolerance of the segment integral giving `P`.
    pub tol: f64,
}

impl Default for TableSettings {
    fn default() -> Self {
        TableSettings { n_max: 6, radius_cap: DEFAULT_RADIUS, seed: 0, tol: 1e-8 }
    }
}

/// Bound and word-ball norm of `fⁿ` for `n = 1..=n_max`; the word ball is
/// only searched for powers whose plain length `n·|f|` fits in the radius.
pub fn distortion_table(
    gens: &GeneratorSet,
    word: &GroupWord,
    x: Point,
    y: Point,
    settings: TableSettings,
) -> Result<(Vec<DistortionRow>, Vec<Collision>)> {
    let TableSettings { n_max, radius_cap, seed, tol } = settings;
    let bound = bound_per_step(gens, word, x, y, tol)?;
    let table = gens.table();
    let searchable: Vec<u64> = (1..=n_max).filter(|&n| n as usize * word.len() <= radius_cap).collect();
    let powers = searchable
        .iter()
        .map(|&n| compose(&word.pow(n as i64), &table))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<&dyn Diffeo> = powers.iter().map(|w| w as &dyn Diffeo).collect();
    let (probes, secondary) = ProbeSet::default_pair(&gens.model.window, seed);
    let ball = word_ball_norms(gens, &targets, radius_cap, &probes, &secondary)?;
    let rows = (1..=n_max)
        .map(|n| {
            let empirical_norm = searchable.iter().position(|&s| s == n).and_then(|k| ball.norms[k]);
            DistortionRow { n, bound: bound.at(n), empirical_norm }
        })
        .collect();
    Ok((rows, ball.collisions))
}

/// Columns `n,bound,empirical_norm,ratio`; unknown values are left empty.
pub fn distortion_csv(rows: &[DistortionRow]) -> String {
    let mut s = String::from("n,bound,empirical_norm,ratio\n");
    for r in rows {
        let norm = r.empirical_norm.map(|k| k.to_string()).unwrap_or_default();
        let ratio = r.ratio().map(|x| format!("{x:.16e}")).unwrap_or_default();
        let _ = writeln!(s, "{},{:.16e},{},{}", r.n, r.bound, norm, ratio);
    }
    s
}
