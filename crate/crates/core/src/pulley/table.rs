use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::WireSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Measured,
    Synthetic,
    Simulated,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Measured => "measured",
            Provenance::Synthetic => "synthetic",
            Provenance::Simulated => "simulated",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "measured" => Ok(Provenance::Measured),
            "synthetic" => Ok(Provenance::Synthetic),
            "simulated" => Ok(Provenance::Simulated),
            other => Err(Error::Config(format!("unknown provenance '{other}'"))),
        }
    }
}

/// One row of an efficiency table; also the CSV record layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyEntry {
    pub wire: String,
    #[serde(rename = "pulley_diameter_mm")]
    pub pulley_diameter_mm: f64,
    #[serde(rename = "tension_n")]
    pub tension_n: f64,
    pub efficiency: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyLookup {
    pub efficiency: f64,
    /// Set when the query was clamped onto the edge of the table.
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MonotonicityWarning {
    /// Efficiency dropped while the pulley diameter grew.
    PulleyDiameter {
        wire: String,
        tension_n: f64,
        smaller_mm: f64,
        larger_mm: f64,
        drop: f64,
    },
    /// Efficiency rose while the wire diameter grew.
    WireDiameter {
        thinner: String,
        thicker: String,
        pulley_diameter_mm: f64,
        tension_n: f64,
        rise: f64,
    },
}

impl fmt::Display for MonotonicityWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonotonicityWarning::PulleyDiameter {
                wire,
                tension_n,
                smaller_mm,
                larger_mm,
                drop,
            } => write!(
                f,
                "{wire} @ {tension_n} N: efficiency drops by {drop:.6} from {smaller_mm} mm to {larger_mm} mm"
            ),
            MonotonicityWarning::WireDiameter {
                thinner,
                thicker,
                pulley_diameter_mm,
                tension_n,
                rise,
            } => write!(
                f,
                "{pulley_diameter_mm} mm @ {tension_n} N: {thicker} exceeds thinner {thinner} by {rise:.6}"
            ),
        }
    }
}

/// Rectangular (pulley diameter × tension) grid for one wire.
#[derive(Debug, Clone, PartialEq)]
struct WireGrid {
    diameters: Vec<f64>,
    tensions: Vec<f64>,
    /// Row-major, `diameters.len()` rows by `tensions.len()` columns.
    values: Vec<f64>,
    provenance: Vec<Provenance>,
}

impl WireGrid {
    fn at(&self, di: usize, ti: usize) -> f64 {
        self.values[di * self.tensions.len() + ti]
    }
}

/// Measured or synthetic per-pulley efficiencies keyed by
/// (wire, pulley diameter, tension), with bilinear interpolation between grid
/// points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EfficiencyTable {
    grids: BTreeMap<String, WireGrid>,
}

fn sorted_unique(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn position(axis: &[f64], x: f64) -> usize {
    axis.iter()
        .position(|&a| a == x)
        .expect("value taken from the same axis")
}

/// Locates `x` on a sorted axis. Returns (lower index, weight of upper
/// neighbour, clamped).
fn bracket(axis: &[f64], x: f64) -> (usize, f64, bool) {
    let first = axis[0];
    let last = axis[axis.len() - 1];
    if axis.len() == 1 {
        return (0, 0.0, x != first);
    }
    if x <= first {
        return (0, 0.0, x < first);
    }
    if x >= last {
        return (axis.len() - 2, 1.0, x > last);
    }
    let hi = axis.partition_point(|&a| a <= x);
    let lo = hi - 1;
    let w = (x - axis[lo]) / (axis[hi] - axis[lo]);
    (lo, w, false)
}

impl EfficiencyTable {
    pub fn from_entries(entries: impl IntoIterator<Item = EfficiencyEntry>) -> Result<Self> {
        let mut by_wire: BTreeMap<String, Vec<EfficiencyEntry>> = BTreeMap::new();
        for e in entries {
            if !(e.efficiency > 0.0 && e.efficiency <= 1.0) {
                return Err(Error::domain(format!(
                    "efficiency {} for {} @ {} mm / {} N outside (0, 1]",
                    e.efficiency, e.wire, e.pulley_diameter_mm, e.tension_n
                )));
            }
            if !(e.pulley_diameter_mm > 0.0) || !(e.tension_n >= 0.0) {
                return Err(Error::domain(format!(
                    "invalid grid point {} mm / {} N for {}",
                    e.pulley_diameter_mm, e.tension_n, e.wire
                )));
            }
            by_wire.entry(e.wire.clone()).or_default().push(e);
        }

        let mut grids = BTreeMap::new();
        for (wire, rows) in by_wire {
            let diameters = sorted_unique(rows.iter().map(|r| r.pulley_diameter_mm).collect());
            let tensions = sorted_unique(rows.iter().map(|r| r.tension_n).collect());
            let cells = diameters.len() * tensions.len();
            let mut values = vec![f64::NAN; cells];
            let mut provenance = vec![Provenance::Synthetic; cells];
            let mut seen = vec![false; cells];
            for r in &rows {
                let idx = position(&diameters, r.pulley_diameter_mm) * tensions.len()
                    + position(&tensions, r.tension_n);
                if seen[idx] {
                    return Err(Error::domain(format!(
                        "duplicate entry for {wire} @ {} mm / {} N",
                        r.pulley_diameter_mm, r.tension_n
                    )));
                }
                seen[idx] = true;
                values[idx] = r.efficiency;
                provenance[idx] = r.provenance;
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::domain(format!(
                    "efficiency grid for {wire} is not rectangular ({} rows for {} diameters x {} tensions)",
                    rows.len(),
                    diameters.len(),
                    tensions.len()
                )));
            }
            grids.insert(
                wire,
                WireGrid {
                    diameters,
                    tensions,
                    values,
                    provenance,
                },
            );
        }
        Ok(EfficiencyTable { grids })
    }

    /// Built-in table used when no measurement is supplied.
    pub fn synthetic(wires: &[WireSpec], diameters_mm: &[f64], tensions_n: &[f64]) -> Result<Self> {
        SyntheticLossModel::default().table(wires, diameters_mm, tensions_n)
    }

    pub fn wires(&self) -> impl Iterator<Item = &str> {
        self.grids.keys().map(String::as_str)
    }

    pub fn diameters(&self, wire: &str) -> Result<&[f64]> {
        Ok(&self.grid(wire)?.diameters)
    }

    pub fn tensions(&self, wire: &str) -> Result<&[f64]> {
        Ok(&self.grid(wire)?.tensions)
    }

    pub fn len(&self) -> usize {
        self.grids.values().map(|g| g.values.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.grids.is_empty()
    }

    /// Entries ordered by wire name, then pulley diameter, then tension.
    pub fn entries(&self) -> Vec<EfficiencyEntry> {
        let mut out = Vec::with_capacity(self.len());
        for (wire, g) in &self.grids {
            for (di, &d) in g.diameters.iter().enumerate() {
                for (ti, &t) in g.tensions.iter().enumerate() {
                    let idx = di * g.tensions.len() + ti;
                    out.push(EfficiencyEntry {
                        wire: wire.clone(),
                        pulley_diameter_mm: d,
                        tension_n: t,
                        efficiency: g.values[idx],
                        provenance: g.provenance[idx],
                    });
                }
            }
        }
        out
    }

    fn grid(&self, wire: &str) -> Result<&WireGrid> {
        self.grids
            .get(wire)
            .ok_or_else(|| Error::NotFound(format!("wire '{wire}' not in efficiency table")))
    }

    /// Bilinear interpolation in (pulley diameter, tension). Queries outside
    /// the grid are clamped to its edge and flagged.
    pub fn lookup(
        &self,
        wire: &str,
        pulley_diameter_mm: f64,
        tension_n: f64,
    ) -> Result<EfficiencyLookup> {
        let g = self.grid(wire)?;
        let (di, wd, clamped_d) = bracket(&g.diameters, pulley_diameter_mm);
        let (ti, wt, clamped_t) = bracket(&g.tensions, tension_n);
        let d_hi = (di + 1).min(g.diameters.len() - 1);
        let t_hi = (ti + 1).min(g.tensions.len() - 1);

        let lerp = |a: f64, b: f64, w: f64| {
            if w == 0.0 {
                a
            } else if w == 1.0 {
                b
            } else {
                a + (b - a) * w
            }
        };
        let low_t = lerp(g.at(di, ti), g.at(d_hi, ti), wd);
        let high_t = lerp(g.at(di, t_hi), g.at(d_hi, t_hi), wd);
        Ok(EfficiencyLookup {
            efficiency: lerp(low_t, high_t, wt),
            extrapolated: clamped_d || clamped_t,
        })
    }

    /// Checks the two empirical trends: efficiency grows with pulley diameter
    /// and shrinks with wire diameter. Violations are returned, not raised.
    pub fn monotonicity_warnings(&self, wires: &[WireSpec]) -> Vec<MonotonicityWarning> {
        let mut out = Vec::new();
        for (wire, g) in &self.grids {
            for (ti, &t) in g.tensions.iter().enumerate() {
                for di in 1..g.diameters.len() {
                    let drop = g.at(di - 1, ti) - g.at(di, ti);
                    if drop > 0.0 {
                        out.push(MonotonicityWarning::PulleyDiameter {
                            wire: wire.clone(),
                            tension_n: t,
                            smaller_mm: g.diameters[di - 1],
                            larger_mm: g.diameters[di],
                            drop,
                        });
                    }
                }
            }
        }

        let mut known: Vec<&WireSpec> = wires
            .iter()
            .filter(|w| self.grids.contains_key(&w.name))
            .collect();
        known.sort_by(|a, b| a.diameter_mm.total_cmp(&b.diameter_mm));
        for pair in known.windows(2) {
            let (thin, thick) = (pair[0], pair[1]);
            if thin.diameter_mm == thick.diameter_mm {
                continue;
            }
            let (gt, gk) = (&self.grids[&thin.name], &self.grids[&thick.name]);
            for (di, &d) in gt.diameters.iter().enumerate() {
                for (ti, &t) in gt.tensions.iter().enumerate() {
                    let (Some(dk), Some(tk)) = (
                        gk.diameters.iter().position(|&x| x == d),
                        gk.tensions.iter().position(|&x| x == t),
                    ) else {
                        continue;
                    };
                    let rise = gk.at(dk, tk) - gt.at(di, ti);
                    if rise > 0.0 {
                        out.push(MonotonicityWarning::WireDiameter {
                            thinner: thin.name.clone(),
                            thicker: thick.name.clone(),
                            pulley_diameter_mm: d,
                            tension_n: t,
                            rise,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let expected = [
            "wire",
            "pulley_diameter_mm",
            "tension_n",
            "efficiency",
            "provenance",
        ];
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if header != expected {
            return Err(Error::Config(format!(
                "efficiency table header must be '{}', got '{}'",
                expected.join(","),
                header.join(",")
            )));
        }
        let rows = rdr
            .deserialize::<EfficiencyEntry>()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_entries(rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for e in self.entries() {
            wtr.serialize(e)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Capstan-like synthetic loss model `E(d) = 1 - c / d` (d in mm). The
/// coefficient `c` is chosen per wire and tension so that the two-pulley loss
/// ratio at the 12 mm reference pulley spans `loss_at_reference`, growing with
/// wire diameter and, more weakly, falling with tension.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLossModel {
    pub reference_diameter_mm: f64,
    /// Two-pulley loss ratio (1 - T_out/T_in) at the reference pulley for the
    /// thinnest wire at the highest tension, and the thickest wire at the
    /// lowest tension.
    pub loss_at_reference: (f64, f64),
    pub wire_diameter_span_mm: (f64, f64),
    pub tension_span_n: (f64, f64),
    /// Share of the loss spread attributed to wire diameter; the rest goes to
    /// tension.
    pub wire_weight: f64,
}

impl Default for SyntheticLossModel {
    fn default() -> Self {
        SyntheticLossModel {
            reference_diameter_mm: 12.0,
            // kept just inside the 0.021..0.081 band so seeded noise stays in it
            loss_at_reference: (0.023, 0.079),
            wire_diameter_span_mm: (1.0, 3.0),
            tension_span_n: (200.0, 400.0),
            wire_weight: 0.9,
        }
    }
}

impl SyntheticLossModel {
    fn unit(x: f64, (lo, hi): (f64, f64)) -> f64 {
        if hi <= lo {
            0.0
        } else {
            ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
        }
    }

    /// Two-pulley loss ratio at the reference diameter.
    pub fn reference_loss(&self, wire_diameter_mm: f64, tension_n: f64) -> f64 {
        let s_wire = Self::unit(wire_diameter_mm, self.wire_diameter_span_mm);
        let s_tension = 1.0 - Self::unit(tension_n, self.tension_span_n);
        let s = self.wire_weight * s_wire + (1.0 - self.wire_weight) * s_tension;
        let (lo, hi) = self.loss_at_reference;
        lo + (hi - lo) * s
    }

    /// The coefficient `c` in `E(d) = 1 - c / d`.
    pub fn coefficient(&self, wire_diameter_mm: f64, tension_n: f64) -> f64 {
        let e_ref = (1.0 - self.reference_loss(wire_diameter_mm, tension_n)).sqrt();
        self.reference_diameter_mm * (1.0 - e_ref)
    }

    /// Per-pulley efficiency, rounded to 1e-9.
    pub fn efficiency(
        &self,
        wire_diameter_mm: f64,
        pulley_diameter_mm: f64,
        tension_n: f64,
    ) -> f64 {
        let c = self.coefficient(wire_diameter_mm, tension_n);
        let e = (1.0 - c / pulley_diameter_mm).clamp(f64::MIN_POSITIVE, 1.0);
        (e * 1e9).round() / 1e9
    }

    pub fn table(
        &self,
        wires: &[WireSpec],
        diameters_mm: &[f64],
        tensions_n: &[f64],
    ) -> Result<EfficiencyTable> {
        let mut entries = Vec::new();
        for w in wires {
            for &d in diameters_mm {
                for &t in tensions_n {
                    entries.push(EfficiencyEntry {
                        wire: w.name.clone(),
                        pulley_diameter_mm: d,
                        tension_n: t,
                        efficiency: self.efficiency(w.diameter_mm, d, t),
                        provenance: Provenance::Synthetic,
                    });
                }
            }
        }
        EfficiencyTable::from_entries(entries)
    }
}
