//! Where the two-level picture fails: resonant spectra of the truncated
//! Rabi model against the quantum Rabi model.
//!
//! Both models share omega_q = omega_r and the same sigma_x coupling; the
//! only difference is whether the rotating-wave-breaking terms act on a
//! two-level system that was truncated before or after coupling. The
//! spectra agree for g_tilde << omega_r and tear apart past roughly a tenth
//! of the resonator frequency.
//!
//! Writes `rabi_vs_qrm.svg` next to the working directory and prints the
//! worst level disagreement per coupling. Run with
//! `cargo run --example rabi_vs_qrm_spectrum`.

use uscqed::plot::{line_chart, ChartSpec, Series};
use uscqed::spectrum::spectrum_sweep;

fn main() -> uscqed::Result<()> {
    let n_levels = 6;
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let points = spectrum_sweep(&grid, n_levels)?;

    println!("g/wr    max |E_h1 - E_qrm| / wr over {n_levels} levels");
    for p in points.iter().step_by(10) {
        let dev = p
            .e_h1
            .iter()
            .zip(&p.e_qrm)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        println!("{:.2}    {dev:.6}", p.g_over_wr);
    }

    // Paired series: solid for the truncated model, dashed for the QRM,
    // one color per level.
    let mut series = Vec::new();
    for level in 0..n_levels {
        let h1: Vec<(f64, f64)> = points
            .iter()
            .map(|p| (p.g_over_wr, p.e_h1[level]))
            .collect();
        let qrm: Vec<(f64, f64)> = points
            .iter()
            .map(|p| (p.g_over_wr, p.e_qrm[level]))
            .collect();
        let mut a = Series::new(format!("H1 level {level}"), h1);
        a.color = Some(level);
        let mut b = Series::new(format!("QRM level {level}"), qrm);
        b.color = Some(level);
        b.dash = true;
        series.push(a);
        series.push(b);
    }
    let svg = line_chart(&ChartSpec {
        title: "Truncated Rabi vs quantum Rabi, resonant".into(),
        x_label: "g_tilde / omega_r".into(),
        y_label: "(E_n - E_0) / omega_r".into(),
        series,
    })?;
    std::fs::write("rabi_vs_qrm.svg", svg)?;
    println!("wrote rabi_vs_qrm.svg");
    Ok(())
}
