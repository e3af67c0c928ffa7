//! Persistent checkpoints of the Hardy-Littlewood integral `I(T) = int_0^T Z(t)^2 dt`.
//!
//! `[0, t_min]` is integrated once from the Euler-Maclaurin oracle. Above
//! `t_min` the integral is a sum over a fixed global grid of Gauss-Legendre
//! panels; checkpoint rows are prefix sums of that grid every `stride` units.
//! Any `I(T)` is therefore `row + whole panels + one partial panel`, and two
//! nearby heights share every panel value bit for bit. That keeps
//! differences like `I(b) - I(a)` accurate to rounding, which the ladder
//! inversion and the substitution weights depend on.
//!
//! Checkpoint values are canonicalised to 15 significant digits before they
//! enter the table, so a table rebuilt in memory and one loaded from disk are
//! identical.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{integrate_seeded, GaussLegendre, QuadratureSpec};
use crate::error::{LabError, Result};
use crate::zeta::{oracle, ZetaEngine};

/// On-disk format version.
pub const TABLE_VERSION: u32 = 1;

const HEADER_PREFIX: &str = "# ladderlab-hl v";
// rows between intermediate saves during long builds
const SAVE_EVERY_ROWS: usize = 2000;

/// One checkpoint `(T, I(T))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub value: f64,
}

/// Versioned, fingerprinted list of checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointTable {
    pub version: u32,
    pub fingerprint: String,
    pub rows: Vec<Checkpoint>,
}

impl CheckpointTable {
    pub fn new(fingerprint: impl Into<String>) -> Self {
        CheckpointTable {
            version: TABLE_VERSION,
            fingerprint: fingerprint.into(),
            rows: Vec::new(),
        }
    }

    /// Check ordering, monotonicity and spacing.
    pub fn validate(&self, stride: f64) -> Result<()> {
        for (i, w) in self.rows.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            if !(b.t > a.t) {
                return Err(LabError::MalformedTable(format!(
                    "rows {i}..{} not strictly increasing in T ({} then {})",
                    i + 1,
                    a.t,
                    b.t
                )));
            }
            if !(b.value > a.value) {
                return Err(LabError::MalformedTable(format!(
                    "I(T) not increasing between T = {} and T = {}",
                    a.t, b.t
                )));
            }
            if b.t - a.t > stride * (1.0 + 1e-12) {
                return Err(LabError::MalformedTable(format!(
                    "row spacing {} exceeds stride {stride}",
                    b.t - a.t
                )));
            }
        }
        Ok(())
    }

    /// Render as CSV text: a header comment, a column line, then one row per
    /// checkpoint with 15 significant digits in fixed notation.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "{HEADER_PREFIX}{} fingerprint={}\nT,I\n",
            self.version, self.fingerprint
        );
        for row in &self.rows {
            out.push_str(&fixed15(row.t));
            out.push(',');
            out.push_str(&fixed15(row.value));
            out.push('\n');
        }
        out
    }

    /// Parse CSV text produced by [`CheckpointTable::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| LabError::MalformedTable("empty file".into()))?;
        let rest = header
            .strip_prefix(HEADER_PREFIX)
            .ok_or_else(|| LabError::MalformedTable(format!("bad header line {header:?}")))?;
        let (version, fp) = rest
            .split_once(" fingerprint=")
            .ok_or_else(|| LabError::MalformedTable(format!("bad header line {header:?}")))?;
        let version: u32 = version
            .parse()
            .map_err(|_| LabError::MalformedTable(format!("bad version {version:?}")))?;
        match lines.next() {
            Some("T,I") => {}
            other => {
                return Err(LabError::MalformedTable(format!(
                    "expected column line, got {other:?}"
                )))
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (t, v) = line
                .split_once(',')
                .ok_or_else(|| LabError::MalformedTable(format!("row {i}: {line:?}")))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| LabError::MalformedTable(format!("row {i}: bad number {s:?}")))
            };
            rows.push(Checkpoint {
                t: parse(t)?,
                value: parse(v)?,
            });
        }
        Ok(CheckpointTable {
            version,
            fingerprint: fp.to_string(),
            rows,
        })
    }

    /// Write atomically (temporary file, then rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
            }
        }
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp).map_err(|e| LabError::io(&tmp, e))?;
            f.write_all(self.to_csv().as_bytes())
                .map_err(|e| LabError::io(&tmp, e))?;
            f.sync_all().map_err(|e| LabError::io(&tmp, e))?;
        }
        fs::rename(&tmp, path).map_err(|e| LabError::io(path, e))
    }

    /// Load a table, rejecting it if its fingerprint differs from `expected`.
    pub fn load(path: &Path, expected: &str) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let table = Self::from_csv(&text)?;
        if table.fingerprint != expected || table.version != TABLE_VERSION {
            return Err(LabError::FingerprintMismatch {
                found: format!("v{}:{}", table.version, table.fingerprint),
                expected: format!("v{TABLE_VERSION}:{expected}"),
            });
        }
        Ok(table)
    }
}

/// Fixed-notation decimal with 15 significant digits.
pub fn fixed15(x: f64) -> String {
    if x == 0.0 {
        return format!("{:.14}", 0.0);
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (14 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // log10 can land one digit off near powers of ten
    let digits = s.chars().filter(|c| c.is_ascii_digit()).count() - leading_zeros(&s);
    if digits > 15 && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

fn leading_zeros(s: &str) -> usize {
    s.chars()
        .filter(|c| c.is_ascii_digit() || *c == '.')
        .take_while(|c| *c == '0' || *c == '.')
        .filter(|c| *c == '0')
        .count()
}

/// Round to the value that survives a [`fixed15`] round trip.
pub fn canonical(x: f64) -> f64 {
    fixed15(x).parse().expect("fixed15 output parses")
}

/// Geometry of the panel grid and checkpoint rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoreParams {
    pub t_min: f64,
    /// Distance between checkpoint rows.
    pub stride: f64,
    /// Width of one Gauss-Legendre panel; must divide `stride`.
    pub panel_width: f64,
    pub gl_order: usize,
}

impl Default for StoreParams {
    fn default() -> Self {
        StoreParams {
            t_min: crate::zeta::DEFAULT_T_MIN,
            stride: 50.0,
            panel_width: 0.5,
            gl_order: 12,
        }
    }
}

impl StoreParams {
    pub fn validate(&self) -> Result<()> {
        let ratio = self.stride / self.panel_width;
        if !(self.panel_width > 0.0) || !(self.stride > 0.0) || (ratio - ratio.round()).abs() > 1e-9
        {
            return Err(LabError::InvalidConfig(format!(
                "panel width {} must divide stride {}",
                self.panel_width, self.stride
            )));
        }
        if self.gl_order < 4 {
            return Err(LabError::InvalidConfig(
                "gl_order must be at least 4".into(),
            ));
        }
        Ok(())
    }

    fn panels_per_row(&self) -> u64 {
        (self.stride / self.panel_width).round() as u64
    }
}

/// Health of the persistent side of an [`HlStore`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoreStatus {
    /// Set when a write failed; the store keeps working in memory.
    pub persist_error: Option<String>,
    /// Set when an on-disk table was discarded (fingerprint or format).
    pub discarded: Option<String>,
    /// Number of rows read from disk at open.
    pub loaded_rows: usize,
}

/// The checkpointed Hardy-Littlewood integral.
///
/// Safe to share between threads: readers take a read lock on the table,
/// extensions take the write lock, and file writes are atomic renames.
pub struct HlStore {
    engine: ZetaEngine,
    params: StoreParams,
    spec: QuadratureSpec,
    fingerprint: String,
    path: Option<PathBuf>,
    gl: GaussLegendre,
    table: RwLock<CheckpointTable>,
    panels: Mutex<HashMap<u64, f64>>,
    status: Mutex<StoreStatus>,
}

impl std::fmt::Debug for HlStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HlStore")
            .field("params", &self.params)
            .field("fingerprint", &self.fingerprint)
            .field("path", &self.path)
            .finish_non_exhaustive()
    }
}

impl HlStore {
    /// Open (or create) a store. With `path = None` the store is purely in
    /// memory. Unreadable or mismatched files are discarded and rebuilt.
    pub fn open(
        engine: ZetaEngine,
        spec: QuadratureSpec,
        params: StoreParams,
        path: Option<PathBuf>,
    ) -> Result<Self> {
        params.validate()?;
        spec.validate()?;
        if params.t_min != engine.t_min() {
            return Err(LabError::InvalidConfig(format!(
                "store t_min {} differs from engine t_min {}",
                params.t_min,
                engine.t_min()
            )));
        }
        let fingerprint = fingerprint(&engine, &spec, &params);
        let mut status = StoreStatus::default();
        let mut table = CheckpointTable::new(fingerprint.clone());
        if let Some(p) = &path {
            if p.exists() {
                match CheckpointTable::load(p, &fingerprint)
                    .and_then(|t| t.validate(params.stride).map(|_| t))
                    .and_then(|t| check_grid(&t, &params).map(|_| t))
                {
                    Ok(t) => {
                        status.loaded_rows = t.rows.len();
                        table = t;
                    }
                    Err(e) => {
                        log::warn!("discarding checkpoint table {}: {e}", p.display());
                        status.discarded = Some(e.to_string());
                    }
                }
            }
        }
        let store = HlStore {
            gl: GaussLegendre::new(params.gl_order),
            engine,
            params,
            spec,
            fingerprint,
            path,
            table: RwLock::new(table),
            panels: Mutex::new(HashMap::new()),
            status: Mutex::new(status),
        };
        store.ensure_base_row()?;
        Ok(store)
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn params(&self) -> StoreParams {
        self.params
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn status(&self) -> StoreStatus {
        self.status.lock().unwrap().clone()
    }

    pub fn snapshot(&self) -> CheckpointTable {
        self.table.read().unwrap().clone()
    }

    /// Highest height currently covered by a checkpoint row.
    pub fn covered_to(&self) -> f64 {
        self.table
            .read()
            .unwrap()
            .rows
            .last()
            .map_or(self.params.t_min, |r| r.t)
    }

    /// `I(T)` for `T >= t_min`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t >= self.params.t_min) || !t.is_finite() {
            return Err(LabError::HeightTooSmall {
                t,
                t_min: self.params.t_min,
            });
        }
        let (row_index, panel_index) = self.locate(t);
        let row = self.row(row_index)?;
        let first_panel = row_index as u64 * self.params.panels_per_row();
        let mut acc = row.value;
        for p in first_panel..panel_index {
            acc += self.panel(p);
        }
        let start = self.panel_start(panel_index);
        if t > start {
            acc += self.partial(start, t);
        }
        Ok(acc)
    }

    /// Solve `I(S) = target` for `S` in `[lo, hi]`.
    pub fn invert(&self, target: f64, lo: f64, hi: f64) -> Result<f64> {
        let lo = lo.max(self.params.t_min);
        if !(lo < hi) {
            return Err(LabError::InvalidInterval { a: lo, b: hi });
        }
        if !(self.value(lo)? <= target && target <= self.value(hi)?) {
            return Err(LabError::BracketFailure { lo, hi });
        }
        // last row at or below the target, then walk panels
        let per_row = self.params.panels_per_row();
        let (lo_row, _) = self.locate(lo);
        let (hi_row, _) = self.locate(hi);
        let j = {
            let table = self.table.read().unwrap();
            let rows = &table.rows[lo_row..=hi_row];
            lo_row
                + rows
                    .partition_point(|r| r.value <= target)
                    .saturating_sub(1)
        };
        let mut acc = self.row(j)?.value;
        let mut p = j as u64 * per_row;
        loop {
            let v = self.panel(p);
            if acc + v >= target {
                break;
            }
            acc += v;
            p += 1;
            if p.is_multiple_of(per_row) {
                // stay consistent with value(), which restarts from each row
                acc = self.row((p / per_row) as usize)?.value;
            }
        }
        let a = self.panel_start(p);
        let b = self.panel_start(p + 1);
        let (mut left, mut right) = (a.max(lo), b.min(hi));
        let eval = |s: f64| if s > a { acc + self.partial(a, s) } else { acc };
        if eval(left) >= target {
            return Ok(left);
        }
        // safeguarded Newton with Z^2 as the derivative
        let mut s = 0.5 * (left + right);
        for _ in 0..200 {
            let f = eval(s) - target;
            if f == 0.0 {
                return Ok(s);
            }
            if f < 0.0 {
                left = s;
            } else {
                right = s;
            }
            let slope = self.engine.z_unchecked(s).powi(2);
            let mut next = s - f / slope;
            if !(next > left && next < right) || !slope.is_finite() || slope <= 0.0 {
                next = 0.5 * (left + right);
            }
            if (next - s).abs() <= 4.0 * f64::EPSILON * s || right - left <= 4.0 * f64::EPSILON * s
            {
                return Ok(next);
            }
            s = next;
        }
        Err(LabError::ConvergenceFailure {
            iterations: 200,
            residual: eval(s) - target,
        })
    }

    /// Make sure checkpoint rows cover `t`.
    pub fn ensure(&self, t: f64) -> Result<()> {
        let (row_index, _) = self.locate(t);
        self.row(row_index).map(|_| ())
    }

    fn locate(&self, t: f64) -> (usize, u64) {
        let offset = t - self.params.t_min;
        let mut panel = (offset / self.params.panel_width).floor() as u64;
        // keep panel_start(panel) <= t despite rounding in the division
        while panel > 0 && self.panel_start(panel) > t {
            panel -= 1;
        }
        while self.panel_start(panel + 1) <= t {
            panel += 1;
        }
        let row = (panel / self.params.panels_per_row()) as usize;
        (row, panel)
    }

    fn panel_start(&self, p: u64) -> f64 {
        self.params.t_min + p as f64 * self.params.panel_width
    }

    fn panel(&self, p: u64) -> f64 {
        if let Some(v) = self.panels.lock().unwrap().get(&p) {
            return *v;
        }
        let v = self.panel_uncached(p);
        self.panels.lock().unwrap().insert(p, v);
        v
    }

    fn panel_uncached(&self, p: u64) -> f64 {
        self.partial(self.panel_start(p), self.panel_start(p + 1))
    }

    fn partial(&self, a: f64, b: f64) -> f64 {
        let e = &self.engine;
        self.gl.integrate(
            |t| {
                let z = e.z_unchecked(t);
                z * z
            },
            a,
            b,
        )
    }

    fn row(&self, index: usize) -> Result<Checkpoint> {
        if let Some(r) = self.table.read().unwrap().rows.get(index) {
            return Ok(*r);
        }
        self.extend_to(index)?;
        Ok(self.table.read().unwrap().rows[index])
    }

    fn ensure_base_row(&self) -> Result<()> {
        if !self.table.read().unwrap().rows.is_empty() {
            return Ok(());
        }
        let t_min = self.params.t_min;
        let spec = QuadratureSpec {
            rel_tol: 1e-13,
            abs_tol: 1e-14,
            ..self.spec
        };
        let q = integrate_seeded(
            |t| oracle::zeta_half(t).expect("below oracle cap").norm_sqr(),
            0.0,
            t_min,
            &spec,
            0.25,
        )?;
        if !q.converged {
            log::warn!(
                "base segment [0, {t_min}] did not converge (err {:e})",
                q.err_est
            );
        }
        self.table.write().unwrap().rows.push(Checkpoint {
            t: canonical(t_min),
            value: canonical(q.value),
        });
        self.persist();
        Ok(())
    }

    // Panels are computed without holding the table lock: a rayon worker
    // that steals a job needing the table must never find it locked by its
    // own thread. Racing builders compute identical rows; only one appends.
    fn extend_to(&self, index: usize) -> Result<()> {
        let per_row = self.params.panels_per_row();
        loop {
            let (len, last) = {
                let table = self.table.read().unwrap();
                (
                    table.rows.len(),
                    *table.rows.last().expect("base row present"),
                )
            };
            if len > index {
                return Ok(());
            }
            let batch_rows = (index + 1 - len).min(SAVE_EVERY_ROWS);
            let first_panel = (len as u64 - 1) * per_row;
            let values: Vec<f64> = (first_panel..first_panel + batch_rows as u64 * per_row)
                .into_par_iter()
                .map(|p| self.panel_uncached(p))
                .collect();
            let mut new_rows = Vec::with_capacity(batch_rows);
            let mut prev = last;
            for (i, chunk) in values.chunks(per_row as usize).enumerate() {
                let acc = chunk.iter().fold(prev.value, |a, v| a + v);
                let next = Checkpoint {
                    t: canonical(self.params.t_min + (len + i) as f64 * self.params.stride),
                    value: canonical(acc),
                };
                if !(next.value > prev.value) {
                    return Err(LabError::MalformedTable(format!(
                        "I(T) failed to increase at T = {}",
                        next.t
                    )));
                }
                new_rows.push(next);
                prev = next;
            }
            let mut guard = self.table.write().unwrap();
            if guard.rows.len() == len {
                guard.rows.extend(new_rows);
                self.persist_locked(&guard);
            }
        }
    }

    fn persist(&self) {
        let guard = self.table.read().unwrap();
        self.persist_locked(&guard);
    }

    fn persist_locked(&self, table: &CheckpointTable) {
        let Some(path) = &self.path else { return };
        let result = table
            .validate(self.params.stride)
            .and_then(|_| table.save(path));
        if let Err(e) = result {
            let err = LabError::StoreUnavailable {
                path: path.clone(),
                reason: e.to_string(),
            };
            log::warn!("{err}; continuing in memory");
            self.status.lock().unwrap().persist_error = Some(err.to_string());
        }
    }
}

fn check_grid(table: &CheckpointTable, params: &StoreParams) -> Result<()> {
    for (i, row) in table.rows.iter().enumerate() {
        let expected = canonical(params.t_min + i as f64 * params.stride);
        if row.t != expected {
            return Err(LabError::MalformedTable(format!(
                "row {i} at T = {} is off the checkpoint grid (expected {expected})",
                row.t
            )));
        }
    }
    Ok(())
}

/// Hex digest identifying everything that influences checkpoint values.
pub fn fingerprint(engine: &ZetaEngine, spec: &QuadratureSpec, params: &StoreParams) -> String {
    let desc = format!(
        "v{TABLE_VERSION};rs_terms={};t_min={:e};stride={:e};panel={:e};gl={};rel={:e};abs={:e};mpo={};depth={}",
        engine.correction_terms(),
        params.t_min,
        params.stride,
        params.panel_width,
        params.gl_order,
        spec.rel_tol,
        spec.abs_tol,
        spec.min_panels_per_oscillation,
        spec.max_depth,
    );
    let digest = Sha256::digest(desc.as_bytes());
    hex::encode(&digest[..8])
}
