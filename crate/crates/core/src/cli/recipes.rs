//! Fixed runs producing the data behind the standard transmission,
//! winding and correlation plots.

use std::path::Path;

use serde_json::json;

use super::output::{fmt_f64, Csv, Emitter};
use super::run::{finish, transmission_task, RunReport, TaskStatus};
use super::runspec::{linspace, ToleranceSpec, DEFAULT_GAMMA_TOT, DEFAULT_OMEGA_EG};
use crate::error::{Error, Result};
use crate::scattering::Mode;
use crate::spinmodel::PresetFamily;
use crate::twophoton::{g2, Normalization, SingleAtomParams};

pub const FIG3A_RATIOS: [f64; 3] = [1.0, 0.5, 0.2];
pub const FIG3B_RATIOS: [f64; 3] = [0.2, 0.65, 0.75];
pub const TRACE_POINTS: usize = 2048;
pub const FIGS1_TAU: (f64, f64, usize) = (-5.0, 5.0, 201);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipe {
    /// Single emitter: transmission trajectories at three channel fractions.
    Fig3a,
    /// Emitter pair: trajectories across both bound-state thresholds.
    Fig3b,
    /// Single emitter: `log10 g²(τ)` over the channel fraction.
    FigS1,
}

impl Recipe {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Fig3a => "fig3a",
            Self::Fig3b => "fig3b",
            Self::FigS1 => "figS1",
        }
    }
}

impl std::str::FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fig3a" => Ok(Self::Fig3a),
            "fig3b" => Ok(Self::Fig3b),
            "figs1" => Ok(Self::FigS1),
            other => Err(Error::InvalidParameter(format!("unknown recipe `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecipeOptions {
    pub mode: Mode,
    pub tolerances: ToleranceSpec,
}

impl Default for RecipeOptions {
    fn default() -> Self {
        Self { mode: Mode::Markov, tolerances: ToleranceSpec::default() }
    }
}

pub fn reproduce(recipe: Recipe, dir: &Path, options: &RecipeOptions) -> Result<RunReport> {
    let mut out = Emitter::new(dir)?;
    let (tasks, description) = match recipe {
        Recipe::Fig3a => {
            let family = PresetFamily::SingleAtom { omega_eg: DEFAULT_OMEGA_EG, gamma_tot: DEFAULT_GAMMA_TOT };
            trajectories(recipe, family, &FIG3A_RATIOS, options, &mut out)?
        }
        Recipe::Fig3b => {
            let family = PresetFamily::TwoAtom { omega_eg: DEFAULT_OMEGA_EG, gamma_tot: DEFAULT_GAMMA_TOT };
            trajectories(recipe, family, &FIG3B_RATIOS, options, &mut out)?
        }
        Recipe::FigS1 => heatmap(&mut out)?,
    };
    let run = json!({
        "recipe": recipe.name(),
        "mode": options.mode,
        "tolerances": options.tolerances,
        "parameters": description,
    });
    finish(out, run, tasks)
}

fn trajectories(
    recipe: Recipe,
    family: PresetFamily,
    ratios: &[f64],
    options: &RecipeOptions,
    out: &mut Emitter,
) -> Result<(Vec<TaskStatus>, serde_json::Value)> {
    let mut summary = Csv::new(&["ratio", "n", "n_b", "winding", "zero_on_contour"]);
    let mut statuses = Vec::new();
    for (index, &ratio) in ratios.iter().enumerate() {
        let prefix = format!("{}_ratio_{}", recipe.name(), fmt_f64(ratio));
        let outcome = family.spin_model(ratio).and_then(|model| {
            let tol = options.tolerances.resolve(&model);
            let count_bic = options.tolerances.count_bic();
            transmission_task(&model, tol, count_bic, None, TRACE_POINTS, options.mode, &prefix, out)
        });
        match &outcome {
            Ok(s) => summary.row(&[
                fmt_f64(ratio),
                s.n.to_string(),
                s.n_b.to_string(),
                s.winding.to_string(),
                s.zero_on_contour.to_string(),
            ]),
            Err(e) => log::error!("{prefix}: {e}"),
        }
        statuses.push(TaskStatus {
            index,
            task: prefix,
            ok: outcome.is_ok(),
            error: outcome.err().map(|e| e.to_string()),
        });
    }
    out.write(&format!("{}_summary.csv", recipe.name()), &summary.into_string())?;
    let description = json!({
        "family": format!("{family:?}"),
        "ratios": ratios,
        "points": TRACE_POINTS,
    });
    Ok((statuses, description))
}

fn heatmap(out: &mut Emitter) -> Result<(Vec<TaskStatus>, serde_json::Value)> {
    let taus = linspace(FIGS1_TAU.0, FIGS1_TAU.1, FIGS1_TAU.2);
    let mut header = vec!["ratio".to_string()];
    header.extend(taus.iter().map(|t| fmt_f64(*t)));
    let mut g2_csv = Csv::new(&header);
    let mut num_csv = Csv::new(&header);
    for i in 0..=100 {
        let ratio = i as f64 / 100.0;
        let params = SingleAtomParams::from_ratio(ratio, DEFAULT_GAMMA_TOT, DEFAULT_OMEGA_EG)?;
        let corr = g2(&taus, &params, Normalization::AsymptoticUnit);
        let mut row = vec![fmt_f64(ratio)];
        row.extend(corr.g2_values.iter().map(|g| fmt_f64(g.log10())));
        g2_csv.row(&row);
        let mut row = vec![fmt_f64(ratio)];
        row.extend(corr.abs_psi2_sq.iter().map(|a| fmt_f64(a.log10())));
        num_csv.row(&row);
    }
    out.write("figS1_log10_g2.csv", &g2_csv.into_string())?;
    out.write("figS1_log10_abs_psi2_sq.csv", &num_csv.into_string())?;
    let status = TaskStatus { index: 0, task: "figS1_heatmap".into(), ok: true, error: None };
    let description = json!({
        "ratios": "i/100, i = 0..=100",
        "tau": [FIGS1_TAU.0, FIGS1_TAU.1, FIGS1_TAU.2],
        "gamma_tot": DEFAULT_GAMMA_TOT,
        "normalization": Normalization::AsymptoticUnit,
    });
    Ok((vec![status], description))
}
