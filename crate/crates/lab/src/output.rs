//! CSV writers. Numbers use Rust's shortest round-trip exponent form, so
//! identical results give byte-identical files.

use sde_tv_core::density::DensityGrid;
use sde_tv_core::rates::{RateCurve, RateFit};
use sde_tv_core::romberg::{Rational, RombergWeights};

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

/// `t,value,stderr`, then the fit and any flagged points as `#` lines.
pub fn curve_csv(curve: &RateCurve, fit: Option<&RateFit>) -> String {
    let mut w = writer();
    w.write_record(["t", "value", "stderr"]).unwrap();
    for p in &curve.points {
        w.write_record([num(p.t), num(p.value), num(p.stderr)]).unwrap();
    }
    let mut out = finish(w);
    if let Some(f) = fit {
        out.push_str(&format!(
            "# slope={}, intercept={}, r2={}\n",
            num(f.slope),
            num(f.intercept),
            num(f.r2)
        ));
    }
    for p in curve.points.iter().filter(|p| p.flagged) {
        out.push_str(&format!("# flagged t={} (excluded from fit)\n", num(p.t)));
    }
    out
}

/// `y,p` at the grid nodes.
pub fn density_csv(grid: &DensityGrid) -> String {
    let mut w = writer();
    w.write_record(["y", "p"]).unwrap();
    for (y, p) in grid.nodes().zip(grid.values()) {
        w.write_record([num(y), num(*p)]).unwrap();
    }
    finish(w)
}

/// `y,p,envelope` at the grid nodes.
pub fn envelope_csv(grid: &DensityGrid, envelope: impl Fn(f64) -> f64) -> String {
    let mut w = writer();
    w.write_record(["y", "p", "envelope"]).unwrap();
    for (y, p) in grid.nodes().zip(grid.values()) {
        w.write_record([num(y), num(*p), num(envelope(y))]).unwrap();
    }
    finish(w)
}

/// `i,n_i,w_exact,w_float`.
pub fn weights_csv(wt: &RombergWeights) -> String {
    let mut w = writer();
    w.write_record(["i", "n_i", "w_exact", "w_float"]).unwrap();
    for (i, ((wi, n), wf)) in wt.w().iter().zip(wt.refiners()).zip(wt.w_f64()).enumerate() {
        w.write_record([(i + 1).to_string(), n.to_string(), fraction(wi), num(wf)])
            .unwrap();
    }
    finish(w)
}

/// `p/q`, or `p` for integers.
pub fn fraction(q: &Rational) -> String {
    if q.denom() == &1.into() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}
