use ndarray::Array2;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Bvh, Hit};
use crate::math::{sigmoid, Rgb};
use crate::par;
use crate::scene::{PseudoImageSet, PseudoRecord};

use super::factorized::{dot, FactorizedField};

/// How rays that miss the collision mesh enter the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissPolicy {
    /// Predicted as the background color: a constant term with no gradient.
    Background,
    /// Excluded from the loss and from sampling.
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossOptions {
    pub background: Rgb,
    pub miss: MissPolicy,
    /// Treat β as a constant: L_dir receives no gradient.
    pub detach_dir: bool,
}

impl Default for LossOptions {
    fn default() -> Self {
        LossOptions {
            background: Rgb::repeat(1.0),
            miss: MissPolicy::Background,
            detach_dir: false,
        }
    }
}

/// Gradients laid out like the two networks' flat parameter vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub pos: Vec<f64>,
    pub dir: Vec<f64>,
}

impl Gradients {
    pub fn zeros(field: &FactorizedField) -> Gradients {
        Gradients {
            pos: vec![0.0; field.pos.params.len()],
            dir: vec![0.0; field.dir.params.len()],
        }
    }

    fn add(&mut self, o: &Gradients) {
        for (a, b) in self.pos.iter_mut().zip(&o.pos) {
            *a += b;
        }
        for (a, b) in self.dir.iter_mut().zip(&o.dir) {
            *a += b;
        }
    }

    fn scale(&mut self, s: f64) {
        self.pos.iter_mut().chain(self.dir.iter_mut()).for_each(|g| *g *= s);
    }
}

/// Rays per parallel work item. Fixed so that summation order, and therefore
/// every gradient bit, is independent of the thread count.
const CHUNK: usize = 128;

struct ChunkResult {
    loss_sum: f64,
    counted: usize,
    per_ray: Vec<f64>,
    grads: Option<Gradients>,
}

fn check_batch(batch: &[PseudoRecord], hits: &[Option<Hit>]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::invalid("loss needs a nonempty batch"));
    }
    if batch.len() != hits.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rays with {} hit entries",
            batch.len(),
            hits.len()
        )));
    }
    Ok(())
}

fn sq_dist(a: &Rgb, b: &Rgb) -> f64 {
    (a - b).norm_squared()
}

/// Loss terms of one chunk of rays; with `want_grad`, also the gradient of
/// the chunk's *sum* of squared errors.
fn chunk_eval(
    field: &FactorizedField,
    batch: &[PseudoRecord],
    hits: &[Option<Hit>],
    opts: &LossOptions,
    want_grad: bool,
) -> Result<ChunkResult> {
    let mut per_ray = vec![0.0; batch.len()];
    let mut loss_sum = 0.0;
    let mut counted = 0;
    let mut idx = Vec::with_capacity(batch.len());
    for (i, (rec, hit)) in batch.iter().zip(hits).enumerate() {
        match hit {
            Some(_) => idx.push(i),
            None if opts.miss == MissPolicy::Background => {
                let l = sq_dist(&opts.background, &rec.color);
                per_ray[i] = l;
                loss_sum += l;
                counted += 1;
            }
            None => {}
        }
    }
    if idx.is_empty() {
        return Ok(ChunkResult {
            loss_sum,
            counted,
            per_ray,
            grads: want_grad.then(|| Gradients::zeros(field)),
        });
    }
    let d = field.dim;
    let pos_raw = Array2::from_shape_fn((idx.len(), 3), |(r, j)| hits[idx[r]].expect("hit").point[j]);
    let dir_raw = Array2::from_shape_fn((idx.len(), 3), |(r, j)| batch[idx[r]].ray.direction[j]);
    let pos_tape = field.pos.forward_tape(&pos_raw);
    let dir_tape = field.dir.forward_tape(&dir_raw);
    let uvw = pos_tape.output();
    let beta = dir_tape.output();
    let mut d_uvw = Array2::<f64>::zeros(uvw.raw_dim());
    let mut d_beta = Array2::<f64>::zeros(beta.raw_dim());
    for (r, &i) in idx.iter().enumerate() {
        let e = uvw.row(r);
        let e = e.as_slice().expect("standard layout");
        let b = beta.row(r);
        let b = b.as_slice().expect("standard layout");
        let target = batch[i].color;
        let mut l = 0.0;
        let mut g = [0.0; 3];
        for c in 0..3 {
            let logit = dot(&e[c * d..(c + 1) * d], b);
            if !logit.is_finite() {
                return Err(Error::NonFinite {
                    what: "logit",
                    location: format!("ray direction {:?}", batch[i].ray.direction),
                });
            }
            let y = sigmoid(logit);
            let diff = y - target[c];
            l += diff * diff;
            g[c] = 2.0 * diff * y * (1.0 - y);
        }
        per_ray[i] = l;
        loss_sum += l;
        counted += 1;
        if want_grad {
            let mut du = d_uvw.row_mut(r);
            let du = du.as_slice_mut().expect("standard layout");
            let mut db = d_beta.row_mut(r);
            let db = db.as_slice_mut().expect("standard layout");
            for c in 0..3 {
                for k in 0..d {
                    du[c * d + k] = g[c] * b[k];
                    db[k] += g[c] * e[c * d + k];
                }
            }
        }
    }
    let grads = if want_grad {
        let mut gr = Gradients::zeros(field);
        field.pos.backward(&pos_tape, d_uvw, &mut gr.pos);
        if !opts.detach_dir {
            field.dir.backward(&dir_tape, d_beta, &mut gr.dir);
        }
        Some(gr)
    } else {
        None
    };
    Ok(ChunkResult {
        loss_sum,
        counted,
        per_ray,
        grads,
    })
}

fn eval_chunks(
    field: &FactorizedField,
    batch: &[PseudoRecord],
    hits: &[Option<Hit>],
    opts: &LossOptions,
    want_grad: bool,
) -> Result<Vec<ChunkResult>> {
    check_batch(batch, hits)?;
    par::try_map_range(batch.len().div_ceil(CHUNK), |c| {
        let r = c * CHUNK..((c + 1) * CHUNK).min(batch.len());
        chunk_eval(field, &batch[r.clone()], &hits[r], opts, want_grad)
    })
}

/// Squared error summed over RGB and averaged over the rays that count
/// (all rays, or only hitting rays under [`MissPolicy::Drop`]).
pub fn loss(field: &FactorizedField, batch: &[PseudoRecord], hits: &[Option<Hit>], opts: &LossOptions) -> Result<f64> {
    let chunks = eval_chunks(field, batch, hits, opts, false)?;
    let (sum, n) = chunks
        .iter()
        .fold((0.0, 0), |(s, n), c| (s + c.loss_sum, n + c.counted));
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Squared error of every ray (zero for dropped misses).
pub fn per_ray_losses(
    field: &FactorizedField,
    batch: &[PseudoRecord],
    hits: &[Option<Hit>],
    opts: &LossOptions,
) -> Result<Vec<f64>> {
    let chunks = eval_chunks(field, batch, hits, opts, false)?;
    Ok(chunks.into_iter().flat_map(|c| c.per_ray).collect())
}

/// Loss, its exact gradient with respect to every parameter, and the per-ray
/// squared errors.
pub fn grad(
    field: &FactorizedField,
    batch: &[PseudoRecord],
    hits: &[Option<Hit>],
    opts: &LossOptions,
) -> Result<(f64, Gradients, Vec<f64>)> {
    let chunks = eval_chunks(field, batch, hits, opts, true)?;
    let mut total = Gradients::zeros(field);
    let mut sum = 0.0;
    let mut n = 0;
    let mut per_ray = Vec::with_capacity(batch.len());
    for c in chunks {
        sum += c.loss_sum;
        n += c.counted;
        total.add(c.grads.as_ref().expect("requested gradients"));
        per_ray.extend(c.per_ray);
    }
    if n == 0 {
        return Ok((0.0, total, per_ray));
    }
    total.scale(1.0 / n as f64);
    Ok((sum / n as f64, total, per_ray))
}

/// First and second moment estimates for [`adam_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    pub fn new(n: usize) -> AdamState {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    let c1 = 1.0 - ADAM_BETA1.powi(state.t as i32);
    let c2 = 1.0 - ADAM_BETA2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * g;
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * g * g;
        let mh = state.m[i] / c1;
        let vh = state.v[i] / c2;
        params[i] -= lr * mh / (vh.sqrt() + ADAM_EPS);
    }
    Ok(())
}

/// Linear warm-up from 0 to `base_lr` over `warmup` steps, then constant.
pub fn lr_schedule(step: u64, warmup: u64, base_lr: f64) -> f64 {
    if warmup == 0 || step >= warmup {
        base_lr
    } else {
        base_lr * step as f64 / warmup as f64
    }
}

/// Warm-up followed by cosine decay to zero at `total`.
pub fn lr_schedule_cosine(step: u64, warmup: u64, total: u64, base_lr: f64) -> f64 {
    if step < warmup || total <= warmup {
        return lr_schedule(step, warmup, base_lr);
    }
    let frac = ((step - warmup) as f64 / (total - warmup) as f64).min(1.0);
    0.5 * base_lr * (1.0 + (std::f64::consts::PI * frac).cos())
}

/// Indices of the `⌈n/10⌉` largest losses (ties to the lower index).
pub fn top_decile(losses: &[f64]) -> Vec<usize> {
    let m = losses.len().div_ceil(10);
    if m == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..losses.len()).collect();
    let cmp = |a: &usize, b: &usize| losses[*b].total_cmp(&losses[*a]).then(a.cmp(b));
    if m < idx.len() {
        idx.select_nth_unstable_by(m - 1, cmp);
        idx.truncate(m);
    }
    idx.sort_unstable_by(cmp);
    idx
}

/// Draws `batch` indices into a pool of `pool_len`: `⌈hard_ratio·batch⌉`
/// uniformly (with replacement) from `hard`, the rest uniformly from the pool.
pub fn sample_with_hard<R: Rng>(
    pool_len: usize,
    hard: &[usize],
    hard_ratio: f64,
    batch: usize,
    rng: &mut R,
) -> Vec<usize> {
    let n_hard = if hard.is_empty() {
        0
    } else {
        ((hard_ratio * batch as f64).ceil() as usize).min(batch)
    };
    let mut out = Vec::with_capacity(batch);
    for _ in 0..n_hard {
        out.push(hard[rng.gen_range(0..hard.len())]);
    }
    for _ in n_hard..batch {
        out.push(rng.gen_range(0..pool_len));
    }
    out
}

/// Hard-ray batch selection over a pool described by its last per-ray losses.
pub fn hard_ray_resample(last_losses: &[f64], hard_ratio: f64, batch: usize, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&hard_ratio) {
        return Err(Error::invalid(format!("hard-ray ratio {hard_ratio} outside [0, 1]")));
    }
    if last_losses.is_empty() {
        return Err(Error::invalid("hard-ray sampling needs a nonempty pool"));
    }
    let hard = top_decile(last_losses);
    let mut rng = crate::seed::rng(seed);
    Ok(sample_with_hard(last_losses.len(), &hard, hard_ratio, batch, &mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch: usize,
    pub steps: u64,
    pub base_lr: f64,
    pub warmup: u64,
    pub cosine: bool,
    pub hard_ratio: f64,
    /// Steps between re-ranking the hardest decile.
    pub hard_refresh: u64,
    pub log_every: u64,
    pub seed: u64,
    pub loss: LossOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch: 4096,
            steps: 20_000,
            base_lr: 5e-4,
            warmup: 500,
            cosine: false,
            hard_ratio: 0.5,
            hard_refresh: 50,
            log_every: 100,
            seed: 0,
            loss: LossOptions::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.warmup > self.steps {
            return Err(Error::Config(format!(
                "warm-up of {} steps exceeds the {} training steps",
                self.warmup, self.steps
            )));
        }
        if !(0.0..=1.0).contains(&self.hard_ratio) {
            return Err(Error::Config(format!(
                "hard-ray ratio {} outside [0, 1]",
                self.hard_ratio
            )));
        }
        if !(self.base_lr.is_finite() && self.base_lr >= 0.0) {
            return Err(Error::Config(format!(
                "learning rate {} is not a nonnegative number",
                self.base_lr
            )));
        }
        if self.log_every == 0 || self.hard_refresh == 0 {
            return Err(Error::Config("log and refresh intervals must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossRecord {
    pub step: u64,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub field: FactorizedField,
    /// Mini-batch loss at every `log_every`-th step and at the last step.
    pub history: Vec<LossRecord>,
    /// Loss over the whole pool before and after training.
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// First mesh hit of every record's ray.
pub fn precompute_hits(bvh: &Bvh, records: &[PseudoRecord]) -> Vec<Option<Hit>> {
    par::map_slice(records, |r| bvh.first_hit(&r.ray))
}

/// Fits `field` to the pseudo-images. First hits against the collision mesh
/// are computed once up front; each step draws a batch (part of it from the
/// current hardest decile of rays), takes an Adam step, and updates the
/// stored losses of the rays it saw.
pub fn train(field: &FactorizedField, pseudo: &PseudoImageSet, bvh: &Bvh, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let hits = precompute_hits(bvh, &pseudo.records);
    train_with_hits(field, &pseudo.records, &hits, cfg)
}

pub fn train_with_hits(
    field: &FactorizedField,
    records: &[PseudoRecord],
    hits: &[Option<Hit>],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    field.validate()?;
    check_batch(records, hits)?;
    let opts = cfg.loss;
    // Pool of rays that take part in training.
    let pool: Vec<usize> = match opts.miss {
        MissPolicy::Background => (0..records.len()).collect(),
        MissPolicy::Drop => (0..records.len()).filter(|&i| hits[i].is_some()).collect(),
    };
    if pool.is_empty() {
        return Err(Error::invalid("no training ray hits the collision mesh"));
    }
    let pool_records: Vec<PseudoRecord> = pool.iter().map(|&i| records[i]).collect();
    let pool_hits: Vec<Option<Hit>> = pool.iter().map(|&i| hits[i]).collect();

    let mut field = field.clone();
    let mut losses = per_ray_losses(&field, &pool_records, &pool_hits, &opts)?;
    // Misses have a fixed error; keep them out of the hard set.
    for (l, h) in losses.iter_mut().zip(&pool_hits) {
        if h.is_none() {
            *l = 0.0;
        }
    }
    let initial_loss = loss(&field, &pool_records, &pool_hits, &opts)?;
    let mut history = Vec::new();
    let mut adam_pos = AdamState::new(field.pos.params.len());
    let mut adam_dir = AdamState::new(field.dir.params.len());
    let mut rng = crate::seed::rng(crate::seed::stage_seed(cfg.seed, "train/batches"));
    let mut hard = Vec::new();
    let mut batch_rec = Vec::with_capacity(cfg.batch);
    let mut batch_hit = Vec::with_capacity(cfg.batch);

    for step in 0..cfg.steps {
        if cfg.hard_ratio > 0.0 && step % cfg.hard_refresh == 0 {
            hard = top_decile(&losses);
        }
        let idx = sample_with_hard(pool.len(), &hard, cfg.hard_ratio, cfg.batch, &mut rng);
        batch_rec.clear();
        batch_hit.clear();
        batch_rec.extend(idx.iter().map(|&i| pool_records[i]));
        batch_hit.extend(idx.iter().map(|&i| pool_hits[i]));
        let (l, g, per_ray) = grad(&field, &batch_rec, &batch_hit, &opts)?;
        if !l.is_finite() {
            return Err(Error::Diverged { step, loss: l });
        }
        for (&i, &pl) in idx.iter().zip(&per_ray) {
            if pool_hits[i].is_some() {
                losses[i] = pl;
            }
        }
        let lr = if cfg.cosine {
            lr_schedule_cosine(step + 1, cfg.warmup, cfg.steps, cfg.base_lr)
        } else {
            lr_schedule(step + 1, cfg.warmup, cfg.base_lr)
        };
        adam_step(&mut field.pos.params, &g.pos, &mut adam_pos, lr)?;
        if !opts.detach_dir {
            adam_step(&mut field.dir.params, &g.dir, &mut adam_dir, lr)?;
        }
        if step % cfg.log_every == 0 || step + 1 == cfg.steps {
            history.push(LossRecord { step, loss: l });
        }
    }
    let final_loss = loss(&field, &pool_records, &pool_hits, &opts)?;
    if !final_loss.is_finite() {
        return Err(Error::Diverged {
            step: cfg.steps,
            loss: final_loss,
        });
    }
    Ok(TrainOutcome {
        field,
        history,
        initial_loss,
        final_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldConfig;
    use crate::math::Vec3;
    use crate::scene::Ray;

    fn fake_batch(n: usize, seed: u64, miss_every: usize) -> (Vec<PseudoRecord>, Vec<Option<Hit>>) {
        let mut rng = crate::seed::rng(seed);
        let mut recs = Vec::new();
        let mut hits = Vec::new();
        for i in 0..n {
            let d = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let p = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            recs.push(PseudoRecord {
                ray: Ray::through(p - d * 3.0, d),
                color: Rgb::new(rng.gen(), rng.gen(), rng.gen()),
            });
            let miss = miss_every > 0 && i % miss_every == 0;
            hits.push((!miss).then_some(Hit {
                face: 0,
                bary: [1.0, 0.0, 0.0],
                t: 3.0,
                point: p,
            }));
        }
        (recs, hits)
    }

    fn fd_config() -> FieldConfig {
        FieldConfig {
            dim: 4,
            pos_depth: 4,
            pos_width: 16,
            pos_freqs: 2,
            dir_depth: 4,
            dir_width: 16,
            dir_freqs: 2,
            residual: Some(true),
        }
    }

    #[test]
    fn loss_arithmetic() {
        let f = FactorizedField::zeros(&fd_config()).unwrap();
        let (mut recs, hits) = fake_batch(5, 1, 0);
        for r in &mut recs {
            r.color = Rgb::repeat(1.0);
        }
        let l = loss(&f, &recs, &hits, &LossOptions::default()).unwrap();
        assert!((l - 0.75).abs() < 1e-15);
        for r in &mut recs {
            r.color = Rgb::repeat(0.5);
        }
        assert_eq!(loss(&f, &recs, &hits, &LossOptions::default()).unwrap(), 0.0);
        let (_, g, _) = grad(&f, &recs, &hits, &LossOptions::default()).unwrap();
        assert!(g.pos.iter().chain(&g.dir).all(|&x| x == 0.0));
        assert!(loss(&f, &[], &[], &LossOptions::default()).is_err());
    }

    #[test]
    fn misses_follow_policy() {
        let f = FactorizedField::zeros(&fd_config()).unwrap();
        let (mut recs, mut hits) = fake_batch(2, 1, 0);
        recs[0].color = Rgb::repeat(0.5);
        recs[1].color = Rgb::repeat(0.0);
        hits[1] = None;
        let bg = LossOptions::default();
        assert!((loss(&f, &recs, &hits, &bg).unwrap() - 1.5).abs() < 1e-15);
        let drop = LossOptions {
            miss: MissPolicy::Drop,
            ..bg
        };
        assert_eq!(loss(&f, &recs, &hits, &drop).unwrap(), 0.0);
    }

    #[test]
    fn gradients_match_central_differences() {
        let field = FactorizedField::init(&fd_config(), 7).unwrap();
        let (recs, hits) = fake_batch(6, 2, 4);
        let opts = LossOptions::default();
        let (_, g, _) = grad(&field, &recs, &hits, &opts).unwrap();
        let mut rng = crate::seed::rng(3);
        let eps = 1e-4;
        let mut checked = 0;
        let mut worst: f64 = 0.0;
        for net in 0..2 {
            let mlp = if net == 0 { &field.pos } else { &field.dir };
            let offs = mlp.layer_offsets();
            let dims = mlp.spec.layer_dims();
            for (l, &(wo, bo)) in offs.iter().enumerate() {
                let end = bo + dims[l].1;
                for _ in 0..5 {
                    for range in [wo..bo, bo..end] {
                        let i = rng.gen_range(range);
                        let mut plus = field.clone();
                        let mut minus = field.clone();
                        let (pp, pm) = if net == 0 {
                            (&mut plus.pos.params, &mut minus.pos.params)
                        } else {
                            (&mut plus.dir.params, &mut minus.dir.params)
                        };
                        pp[i] += eps;
                        pm[i] -= eps;
                        let numeric = (loss(&plus, &recs, &hits, &opts).unwrap()
                            - loss(&minus, &recs, &hits, &opts).unwrap())
                            / (2.0 * eps);
                        let analytic = if net == 0 { g.pos[i] } else { g.dir[i] };
                        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7);
                        worst = worst.max(rel);
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked >= 50);
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn detached_direction_gets_no_gradient() {
        let field = FactorizedField::init(&fd_config(), 7).unwrap();
        let (recs, hits) = fake_batch(6, 2, 0);
        let opts = LossOptions {
            detach_dir: true,
            ..LossOptions::default()
        };
        let (_, g, _) = grad(&field, &recs, &hits, &opts).unwrap();
        assert!(g.dir.iter().all(|&x| x == 0.0));
        assert!(g.pos.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn gradient_independent_of_chunking() {
        let field = FactorizedField::init(&fd_config(), 7).unwrap();
        let (recs, hits) = fake_batch(300, 4, 7);
        let opts = LossOptions::default();
        let (l, g, per) = grad(&field, &recs, &hits, &opts).unwrap();
        let (l2, g2, _) = grad(&field, &recs, &hits, &opts).unwrap();
        assert_eq!((l, &g), (l2, &g2));
        let mean = per.iter().sum::<f64>() / 300.0;
        assert!((mean - l).abs() < 1e-12);
    }

    #[test]
    fn adam_basics() {
        let mut p = vec![1.0, -2.0];
        let mut st = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut st, 0.1).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        // Convex quadratic (x - 3)^2.
        let run = || {
            let mut x = vec![0.0];
            let mut st = AdamState::new(1);
            let mut traj = Vec::new();
            for _ in 0..2000 {
                let g = [2.0 * (x[0] - 3.0)];
                adam_step(&mut x, &g, &mut st, 1e-2).unwrap();
                traj.push(x[0]);
            }
            traj
        };
        let a = run();
        assert!((a.last().unwrap() - 3.0).abs() < 1e-3, "{}", a.last().unwrap());
        assert_eq!(a, run());
        assert!(adam_step(&mut p, &[0.0], &mut st, 0.1).is_err());
    }

    #[test]
    fn warmup_schedule() {
        assert_eq!(lr_schedule(0, 500, 5e-4), 0.0);
        assert_eq!(lr_schedule(500, 500, 5e-4), 5e-4);
        assert!((lr_schedule(250, 500, 5e-4) - 2.5e-4).abs() < 1e-18);
        assert_eq!(lr_schedule(9000, 500, 5e-4), 5e-4);
        assert_eq!(lr_schedule(3, 0, 1.0), 1.0);
        assert!((lr_schedule_cosine(1000, 0, 1000, 1.0)).abs() < 1e-12);
        assert!((lr_schedule_cosine(500, 0, 1000, 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hard_ray_sampling() {
        let losses: Vec<f64> = (0..1000)
            .map(|i| if i % 10 == 3 { 5.0 + i as f64 } else { 0.01 })
            .collect();
        let top: std::collections::HashSet<usize> = top_decile(&losses).into_iter().collect();
        assert_eq!(top.len(), 100);
        assert!(top.iter().all(|i| i % 10 == 3));
        let all_hard = hard_ray_resample(&losses, 1.0, 500, 1).unwrap();
        assert!(all_hard.iter().all(|i| top.contains(i)));
        assert_eq!(all_hard, hard_ray_resample(&losses, 1.0, 500, 1).unwrap());
        let uniform = hard_ray_resample(&losses, 0.0, 10_000, 2).unwrap();
        let frac = uniform.iter().filter(|i| top.contains(i)).count() as f64 / 10_000.0;
        assert!((frac - 0.1).abs() < 0.015, "{frac}");
        let mixed = hard_ray_resample(&losses, 0.3, 10_000, 3).unwrap();
        let frac = mixed.iter().filter(|i| top.contains(i)).count() as f64 / 10_000.0;
        assert!((frac - (0.3 + 0.1 * 0.7)).abs() < 0.015, "{frac}");
        assert!(hard_ray_resample(&losses, 1.5, 10, 0).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        assert!(TrainConfig { batch: 0, ..ok }.validate().is_err());
        assert!(TrainConfig {
            warmup: 10,
            steps: 5,
            ..ok
        }
        .validate()
        .is_err());
        assert!(TrainConfig { hard_ratio: -0.1, ..ok }.validate().is_err());
    }

    #[test]
    fn zero_steps_and_determinism() {
        let field = FactorizedField::init(&fd_config(), 1).unwrap();
        let (recs, hits) = fake_batch(400, 5, 9);
        let cfg = TrainConfig {
            steps: 0,
            warmup: 0,
            batch: 64,
            ..TrainConfig::default()
        };
        let out = train_with_hits(&field, &recs, &hits, &cfg).unwrap();
        assert_eq!(out.field, field);
        assert!(out.history.is_empty());
        let cfg = TrainConfig {
            steps: 60,
            warmup: 10,
            batch: 64,
            base_lr: 1e-2,
            log_every: 10,
            ..cfg
        };
        let a = train_with_hits(&field, &recs, &hits, &cfg).unwrap();
        let b = train_with_hits(&field, &recs, &hits, &cfg).unwrap();
        assert_eq!(a.field, b.field);
        assert_eq!(a.history, b.history);
        assert_eq!(a.history.len(), 7);
        assert!(a.history.windows(2).all(|w| w[0].step < w[1].step));
    }
}
