//! Time series of norms, energy, Γ's and audited terms.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::norms::{EnergySample, TOP_THIRD_LIMIT};

pub const LEDGER_COLUMNS: [&str; 22] = [
    "t", "tau", "X", "Y", "Z", "H", "E", "Gamma1", "Gamma2", "T_A1", "T_A2", "T_N", "T_L", "T_M", "T_B", "T_dyN", "T_dyL",
    "T_dyM", "T_dyB", "residual_A", "residual_w", "residual_vort",
];

/// Quantities whose time derivatives enter the three energy identities.
///
/// For each balance: `energy` is ½‖·‖², `diss` the |∂x|^{1/2} norm squared that multiplies
/// −τ̇, and `rhs` the exact semi-discrete value of ⟨∂t f + f ∂t log ρ, f⟩.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityScalars {
    pub a_energy: f64,
    pub a_diss: f64,
    pub a_rhs: f64,
    pub w_energy: f64,
    pub w_diss: f64,
    pub w_rhs: f64,
    pub w_damping: f64,
    pub v_energy: f64,
    pub v_diss: f64,
    pub v_rhs: f64,
    pub v_damping: f64,
    /// ∫∫ ξ|w̄|²ρ² e^{2τ|ξ|}⟨ξ⟩^{2r}
    pub odd_w: f64,
    /// ∫∫ yξ|χ∂yw̄|²ρ² e^{2τ|ξ|}⟨ξ⟩^{2r−1}
    pub odd_v: f64,
    /// the same integrals with |ξ| in place of ξ
    pub odd_w_scale: f64,
    pub odd_v_scale: f64,
}

/// Column names of the identity sidecar file, `t` followed by [`IdentityScalars`].
pub const IDENTITY_COLUMNS: [&str; 16] = [
    "t", "a_energy", "a_diss", "a_rhs", "w_energy", "w_diss", "w_rhs", "w_damping", "v_energy", "v_diss", "v_rhs", "v_damping",
    "odd_w", "odd_v", "odd_w_scale", "odd_v_scale",
];

impl IdentityScalars {
    fn values(&self) -> [f64; 15] {
        [
            self.a_energy, self.a_diss, self.a_rhs, self.w_energy, self.w_diss, self.w_rhs, self.w_damping, self.v_energy,
            self.v_diss, self.v_rhs, self.v_damping, self.odd_w, self.odd_v, self.odd_w_scale, self.odd_v_scale,
        ]
    }

    fn from_values(v: &[f64]) -> Self {
        IdentityScalars {
            a_energy: v[0],
            a_diss: v[1],
            a_rhs: v[2],
            w_energy: v[3],
            w_diss: v[4],
            w_rhs: v[5],
            w_damping: v[6],
            v_energy: v[7],
            v_diss: v[8],
            v_rhs: v[9],
            v_damping: v[10],
            odd_w: v[11],
            odd_v: v[12],
            odd_w_scale: v[13],
            odd_v_scale: v[14],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub tau: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub h: f64,
    pub e: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub t_a1: f64,
    pub t_a2: f64,
    pub t_n: f64,
    pub t_l: f64,
    pub t_m: f64,
    pub t_b: f64,
    pub t_dyn: f64,
    pub t_dyl: f64,
    pub t_dym: f64,
    pub t_dyb: f64,
    pub residual_a: f64,
    pub residual_w: f64,
    pub residual_vort: f64,
    #[serde(skip)]
    pub ident: IdentityScalars,
    #[serde(skip)]
    pub top_fraction: f64,
}

impl LedgerRow {
    fn values(&self) -> [f64; 22] {
        [
            self.t, self.tau, self.x, self.y, self.z, self.h, self.e, self.gamma1, self.gamma2, self.t_a1, self.t_a2, self.t_n,
            self.t_l, self.t_m, self.t_b, self.t_dyn, self.t_dyl, self.t_dym, self.t_dyb, self.residual_a, self.residual_w,
            self.residual_vort,
        ]
    }

    fn from_values(v: &[f64]) -> Self {
        LedgerRow {
            t: v[0],
            tau: v[1],
            x: v[2],
            y: v[3],
            z: v[4],
            h: v[5],
            e: v[6],
            gamma1: v[7],
            gamma2: v[8],
            t_a1: v[9],
            t_a2: v[10],
            t_n: v[11],
            t_l: v[12],
            t_m: v[13],
            t_b: v[14],
            t_dyn: v[15],
            t_dyl: v[16],
            t_dym: v[17],
            t_dyb: v[18],
            residual_a: v[19],
            residual_w: v[20],
            residual_vort: v[21],
            ..Default::default()
        }
    }

    pub fn energy_sample(&self) -> EnergySample {
        EnergySample { t: self.t, x: self.x, y: self.y, z: self.z, h: self.h }
    }

    pub fn under_resolved(&self) -> bool {
        self.top_fraction > TOP_THIRD_LIMIT
    }
}

/// Residuals of the three identities at the middle of three consecutive rows.
///
/// d/dt and τ̇ are centered differences over the outer rows.
pub fn centered_residuals(prev: &LedgerRow, mid: &LedgerRow, next: &LedgerRow) -> (f64, f64, f64) {
    let dt = next.t - prev.t;
    let tau_dot = (next.tau - prev.tau) / dt;
    let (p, m, n) = (&prev.ident, &mid.ident, &next.ident);
    let ra = (n.a_energy - p.a_energy) / dt - tau_dot * m.a_diss - m.a_rhs;
    let rw = (n.w_energy - p.w_energy) / dt - tau_dot * m.w_diss - m.w_rhs;
    let rv = (n.v_energy - p.v_energy) / dt - tau_dot * m.v_diss - m.v_rhs;
    (ra, rw, rv)
}

/// Single-writer ledger; E and the identity residuals are filled in as rows arrive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub eps: f64,
    pub rows: Vec<LedgerRow>,
    sup_x2: f64,
    integral: f64,
}

impl EnergyLedger {
    pub fn new(eps: f64) -> Self {
        Self { eps, rows: Vec::new(), sup_x2: 0.0, integral: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&LedgerRow> {
        self.rows.last()
    }

    pub fn push(&mut self, mut row: LedgerRow) -> Result<()> {
        if let Some(prev) = self.rows.last() {
            if !(row.t > prev.t) {
                return Err(Error::config(format!("ledger times must increase: {} after {}", row.t, prev.t)));
            }
            let f = |r: &LedgerRow| r.y * r.y + r.z * r.z / 16.0 + r.h * r.h / (64.0 * self.eps);
            self.integral += 0.5 * (row.t - prev.t) * (f(prev) + f(&row));
        }
        self.sup_x2 = self.sup_x2.max(row.x * row.x);
        row.e = self.sup_x2 + self.integral;
        row.residual_a = f64::NAN;
        row.residual_w = f64::NAN;
        row.residual_vort = f64::NAN;
        self.rows.push(row);
        let n = self.rows.len();
        if n >= 3 {
            let (ra, rw, rv) = centered_residuals(&self.rows[n - 3], &self.rows[n - 2], &self.rows[n - 1]);
            let mid = &mut self.rows[n - 2];
            mid.residual_a = ra;
            mid.residual_w = rw;
            mid.residual_vort = rv;
        }
        Ok(())
    }

    pub fn energy_samples(&self) -> Vec<EnergySample> {
        self.rows.iter().map(LedgerRow::energy_sample).collect()
    }

    /// Header plus one line per row, every value as `{:.17e}`.
    pub fn to_csv(&self) -> String {
        csv_table(&LEDGER_COLUMNS, self.rows.iter().map(|r| r.values().to_vec()))
    }

    /// Identity scalars of every row, keyed by t.
    pub fn identities_to_csv(&self) -> String {
        csv_table(&IDENTITY_COLUMNS, self.rows.iter().map(|r| std::iter::once(r.t).chain(r.ident.values()).collect()))
    }

    /// Restores identity scalars written by [`identities_to_csv`](Self::identities_to_csv).
    pub fn attach_identities_csv(&mut self, text: &str) -> Result<()> {
        let table = parse_table(text, &IDENTITY_COLUMNS)?;
        if table.len() != self.rows.len() {
            return Err(Error::Dimension { expected: self.rows.len(), got: table.len() });
        }
        for (row, vals) in self.rows.iter_mut().zip(&table) {
            if vals[0] != row.t {
                return Err(Error::config(format!("identity file row at t = {} does not match ledger t = {}", vals[0], row.t)));
            }
            row.ident = IdentityScalars::from_values(&vals[1..]);
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parses the CSV columns back; identity scalars are not part of the file.
    pub fn from_csv(text: &str, eps: f64) -> Result<Self> {
        let mut ledger = EnergyLedger::new(eps);
        ledger.rows = parse_table(text, &LEDGER_COLUMNS)?.iter().map(|v| LedgerRow::from_values(v)).collect();
        Ok(ledger)
    }
}

fn csv_table(columns: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = columns.join(",");
    s.push('\n');
    for vals in rows {
        for (i, v) in vals.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v:.17e}");
        }
        s.push('\n');
    }
    s
}

fn parse_table(text: &str, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::config("empty table"))?;
    if header.split(',').collect::<Vec<_>>() != columns {
        return Err(Error::config("table header does not match the schema"));
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::config(format!("line {}: {e}", k + 2)))?;
            if vals.len() != columns.len() {
                return Err(Error::Dimension { expected: columns.len(), got: vals.len() });
            }
            Ok(vals)
        })
        .collect()
}
