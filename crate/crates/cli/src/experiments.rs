use qthermo::fluctuation::{crooks_report, jarzynski, naive_weak_statistics, NaiveOptions, Propagation, WorkProtocol};
use qthermo::thermo::{run_protocol, Dynamics, ThermoConfig};
use qthermo::Result;
use rayon::prelude::*;

use crate::config::{RunConfig, SweepVariable};
use crate::output::{num, Table};

pub fn header(cfg: &RunConfig) -> Result<Table> {
    let model = cfg.model.build()?;
    let mut params = cfg.describe();
    params.extend(model.describe().into_iter().map(|(k, v)| (k.to_string(), v)));
    Ok(Table::new(&cfg.experiment.to_string(), &params))
}

pub fn timeseries(cfg: &RunConfig) -> Result<Table> {
    let mut table = header(cfg)?;
    let model = cfg.model.build()?;
    let series = run_protocol(
        model.as_ref(),
        &ThermoConfig::new(cfg.beta, cfg.tau_prime, cfg.n_steps).with_dynamics(cfg.dynamics),
    )?;
    table.columns(&[
        "t",
        "W",
        "W_w",
        "Q",
        "Q_w",
        "E",
        "S_v",
        "D_rel",
        "Delta_S",
        "F",
        "delta_W",
        "delta_Q",
        "first_law_residual",
    ]);
    for r in &series.records {
        table.row(&[
            r.t,
            r.work,
            r.work_weak,
            r.heat,
            r.heat_weak,
            r.energy,
            r.von_neumann,
            r.relative_entropy,
            r.entropy_change,
            r.free_energy,
            r.delta_work,
            r.delta_heat,
            r.first_law_residual,
        ]);
    }
    Ok(table)
}

struct SweepPoint {
    value: f64,
    delta_work: f64,
    delta_heat: f64,
    naive_scalar: f64,
    naive_tpm: f64,
}

fn sweep_point(cfg: &RunConfig, variable: SweepVariable, value: f64) -> Result<SweepPoint> {
    let (spec, tau_prime) = match variable {
        SweepVariable::G => (cfg.model.with_coupling(value), cfg.tau_prime),
        SweepVariable::OmegaB => (cfg.model.with_bath_frequency(value), cfg.tau_prime),
        SweepVariable::TauPrime => (cfg.model.clone(), value),
    };
    let model = spec.build()?;
    let stats = naive_weak_statistics(
        model.as_ref(),
        tau_prime,
        cfg.n_steps,
        cfg.beta,
        NaiveOptions { dynamics: cfg.dynamics, tpm_samples: cfg.samples },
    )?;
    Ok(SweepPoint {
        value,
        delta_work: stats.thermo.delta_max_work(),
        delta_heat: stats.thermo.delta_max_heat(),
        naive_scalar: stats.delta_max_scalar(),
        naive_tpm: stats.delta_max_tpm(),
    })
}

/// Central differences inside, one-sided at the ends.
fn derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (y[b] - y[a]) / (x[b] - x[a])
        })
        .collect()
}

pub fn sweep(cfg: &RunConfig) -> Result<Table> {
    let mut table = header(cfg)?;
    let sweep = cfg.sweep.expect("sweep experiments carry a sweep");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| qthermo::Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let points: Vec<SweepPoint> = pool.install(|| {
        sweep.values().into_par_iter().map(|v| sweep_point(cfg, sweep.variable, v)).collect::<Result<Vec<_>>>()
    })?;

    let with_slope = sweep.variable == SweepVariable::OmegaB;
    let mut columns = vec![
        "sweep_value",
        "delta_max_W",
        "delta_max_Q",
        "delta_max_naive_jarzynski_scalar",
        "delta_max_naive_jarzynski_tpm",
    ];
    if with_slope {
        columns.push("d_delta_max_W_d_omega_b");
    }
    table.columns(&columns);
    let xs: Vec<f64> = points.iter().map(|p| p.value).collect();
    let slope = derivative(&xs, &points.iter().map(|p| p.delta_work).collect::<Vec<_>>());
    for (p, s) in points.iter().zip(slope) {
        let mut row = vec![p.value, p.delta_work, p.delta_heat, p.naive_scalar, p.naive_tpm];
        if with_slope {
            row.push(s);
        }
        table.row(&row);
    }
    Ok(table)
}

pub fn fluctuation(cfg: &RunConfig) -> Result<Table> {
    let mut table = header(cfg)?;
    let model = cfg.model.build()?;
    let propagation = match cfg.dynamics {
        Dynamics::Mapped => Propagation::ThreeStage,
        Dynamics::Direct => Propagation::Direct,
    };
    let protocol = WorkProtocol::new(model.as_ref(), cfg.tau_prime, cfg.n_steps, cfg.beta, propagation)?;
    let (forward, reverse) = (protocol.forward()?, protocol.reverse()?);
    let ratio = protocol.system_ratio();
    let lhs = jarzynski(&forward, cfg.beta);
    let report = crooks_report(&forward, &reverse, ratio, cfg.beta);

    table.comment("jarzynski_lhs", num(lhs));
    table.comment("Zs_ratio", num(ratio));
    table.comment("jarzynski_rel_err", num((lhs / ratio - 1.0).abs()));
    table.comment("crooks_max_rel_err", num(report.max_rel_err));
    let mismatch: Vec<String> = report.support_mismatch.iter().map(|&w| num(w)).collect();
    table.comment("support_mismatch", if mismatch.is_empty() { "none".to_string() } else { mismatch.join(" ") });
    table.columns(&["w", "p_forward", "p_reverse_reflected", "crooks_rel_err"]);
    for row in &report.rows {
        table.row(&[row.work, row.forward, row.reverse, row.rel_err.unwrap_or(f64::NAN)]);
    }
    Ok(table)
}
