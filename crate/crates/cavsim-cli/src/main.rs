//! `cavsim` — command-line interface for the hybrid photon-spin gate
//! simulator.
//!
//! All rates are expressed in units of the cavity decay rate κ. Exit codes:
//! 0 success, 1 verification failure, 2 usage or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cavsim::analysis::{
    efficiency_closed, efficiency_simulated, fidelity_closed, fidelity_simulated,
    ideal_gate_matrix, matrix_distance, sweep_with_threads, SweepGrid, EFFICIENCY_CONVENTION,
    FIDELITY_CONVENTION,
};
use cavsim::cavity::{
    dephasing_factor, resonant_coefficients, CavityParams, DephasingParams, ScatterCoefficients,
};
use cavsim::checkpoints::verify_checkpoints;
use cavsim::circuits::{computational_basis, extract_gate_matrix, CavityModel, GateKind};
use cavsim::circfile::{emit_circuit, parse_circuit};

#[derive(Parser)]
#[command(
    name = "cavsim",
    version,
    about = "Simulator and analysis toolkit for photon-spin hybrid gates built on quantum-dot microcavities",
    after_help = "All rates (g, kappa_s, gamma) are in units of the cavity decay rate kappa.\n\
                  CAVSIM_THREADS caps sweep parallelism."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RateArgs {
    /// Dot-cavity coupling strength g/kappa
    #[arg(long, allow_negative_numbers = true)]
    g: f64,
    /// Side leakage rate kappa_s/kappa
    #[arg(long = "kappa-s", allow_negative_numbers = true)]
    kappa_s: f64,
    /// Dipole decay rate gamma/kappa
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    gamma: f64,
}

impl RateArgs {
    fn coefficients(&self) -> Result<ScatterCoefficients, String> {
        let params = CavityParams::resonant(self.g, self.kappa_s, self.gamma);
        resonant_coefficients(&params).map_err(|e| e.to_string())
    }
}

#[derive(Args, Clone)]
struct GateArg {
    /// Gate circuit: cnot, toffoli, or fredkin
    #[arg(long)]
    gate: String,
}

impl GateArg {
    fn kind(&self) -> Result<GateKind, String> {
        GateKind::parse(&self.gate).ok_or_else(|| {
            format!(
                "unknown gate '{}' (expected cnot, toffoli, or fredkin)",
                self.gate
            )
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the resonant scattering coefficients r, t, r0, t0
    Coeffs(RateArgs),
    /// Extract the ideal-model gate matrix and compare with the target unitary
    Verify {
        #[command(flatten)]
        gate: GateArg,
        /// Run a circuit description file instead of the built-in circuit
        #[arg(long)]
        circuit: Option<PathBuf>,
    },
    /// Compare tagged intermediate states against their closed forms for
    /// seeded random inputs
    Trace {
        #[command(flatten)]
        gate: GateArg,
        /// Cavity model: ideal or lossy
        #[arg(long, default_value = "ideal")]
        model: String,
        /// g/kappa (lossy model)
        #[arg(long)]
        g: Option<f64>,
        /// kappa_s/kappa (lossy model)
        #[arg(long = "kappa-s")]
        kappa_s: Option<f64>,
        /// gamma/kappa (lossy model)
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        /// Seed for the random amplitude tuples
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Number of random tuples
        #[arg(long, default_value_t = 20)]
        tuples: usize,
    },
    /// Closed-form and simulated fidelity/efficiency at one operating point
    Simulate {
        #[command(flatten)]
        gate: GateArg,
        #[command(flatten)]
        rates: RateArgs,
        /// Cavity photon lifetime (for the dephasing factor; same unit as t2)
        #[arg(long, requires = "t2")]
        tau: Option<f64>,
        /// Trion coherence time
        #[arg(long, requires = "tau")]
        t2: Option<f64>,
    },
    /// Tabulate F and eta over a (g, kappa_s) grid to CSV or JSON
    Sweep {
        #[command(flatten)]
        gate: GateArg,
        /// Comma-separated g/kappa line values
        #[arg(long, default_value = "0.5,0.75,1.0,2.4")]
        g: String,
        /// kappa_s/kappa values: start:stop:step or a comma-separated list
        #[arg(long = "kappa-s", default_value = "0:2:0.01")]
        kappa_s: String,
        /// gamma/kappa
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        /// Output file
        #[arg(long)]
        out: PathBuf,
        /// Output format: csv or json
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Write a gate circuit in the .circ text format
    EmitCircuit {
        #[command(flatten)]
        gate: GateArg,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fmt9(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.9}")
}

fn fmt_complex(z: cavsim::C64) -> String {
    format!("{} {} {}i", fmt9(z.re), if z.im < 0.0 { "-" } else { "+" }, fmt9(z.im.abs()))
}

fn cmd_coeffs(rates: &RateArgs) -> Result<(), String> {
    let coeffs = rates.coefficients()?;
    let m = coeffs.magnitudes();
    println!(
        "operating point: g={} kappa_s={} gamma={} (units of kappa, on resonance)",
        fmt9(rates.g),
        fmt9(rates.kappa_s),
        fmt9(rates.gamma)
    );
    println!("r    = {}", fmt_complex(coeffs.r));
    println!("t    = {}", fmt_complex(coeffs.t));
    println!("r0   = {}", fmt_complex(coeffs.r0));
    println!("t0   = {}", fmt_complex(coeffs.t0));
    println!("|r|  = {}   |t|  = {}", fmt9(m.r), fmt9(m.t));
    println!("|r0| = {}   |t0| = {}", fmt9(m.r0), fmt9(m.t0));
    println!("X    = {}   (mean pass survival)", fmt9(m.mean_survival()));
    Ok(())
}

fn cmd_verify(gate: &GateArg, circuit_file: Option<&PathBuf>) -> Result<bool, String> {
    let kind = gate.kind()?;
    let circuit = match circuit_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            parse_circuit(&text).map_err(|e| e.to_string())?
        }
        None => kind.build(),
    };
    let extracted =
        extract_gate_matrix(&circuit, &CavityModel::Ideal).map_err(|e| e.to_string())?;
    let target = ideal_gate_matrix(kind);
    let distance = matrix_distance(&target, &extracted).map_err(|e| e.to_string())?;

    println!("gate: {} (circuit '{}')", kind.name(), circuit.name);
    println!("truth table (ideal cavity model):");
    let basis = computational_basis(kind.electron_count());
    let dim = basis.len();
    for (col, (pol, spins)) in basis.iter().enumerate() {
        let (best_row, best_amp) = (0..dim)
            .map(|row| (row, extracted.get(row, col)))
            .max_by(|(_, a), (_, b)| a.norm().total_cmp(&b.norm()))
            .unwrap();
        let (out_pol, out_spins) = &basis[best_row];
        println!(
            "  |{pol},{spins}>  ->  {} |{out_pol},{out_spins}>",
            fmt9(best_amp.re)
        );
    }
    println!("matrix distance to target (up to global phase): {distance:.3e}");
    let pass = distance < 1e-10;
    println!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn cmd_trace(
    gate: &GateArg,
    model_name: &str,
    g: Option<f64>,
    kappa_s: Option<f64>,
    gamma: f64,
    seed: u64,
    tuples: usize,
) -> Result<bool, String> {
    let kind = gate.kind()?;
    let model = match model_name {
        "ideal" => CavityModel::Ideal,
        "lossy" => {
            let (g, ks) = match (g, kappa_s) {
                (Some(g), Some(ks)) => (g, ks),
                _ => return Err("lossy model requires --g and --kappa-s".to_string()),
            };
            let rates = RateArgs { g, kappa_s: ks, gamma };
            CavityModel::Lossy(rates.coefficients()?)
        }
        other => return Err(format!("unknown model '{other}' (expected ideal|lossy)")),
    };
    let report = verify_checkpoints(kind, &model, seed, tuples).map_err(|e| e.to_string())?;
    println!(
        "gate: {}  model: {model_name}  generator: {}  seed: {seed}  tuples: {tuples}",
        kind.name(),
        report.generator
    );
    let mut pass = true;
    for dev in &report.deviations {
        let ok = dev.max_deviation <= 1e-10;
        pass &= ok;
        println!(
            "  {}: max deviation {:.3e} over {} tuples  [{}]",
            dev.tag,
            dev.max_deviation,
            dev.tuples_checked,
            if ok { "ok" } else { "DEVIATES" }
        );
    }
    if model_name == "lossy" && kind != GateKind::Cnot {
        println!("  (lossy closed forms exist only up to the first cavity for this gate)");
    }
    println!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn cmd_simulate(
    gate: &GateArg,
    rates: &RateArgs,
    tau: Option<f64>,
    t2: Option<f64>,
) -> Result<(), String> {
    let kind = gate.kind()?;
    let coeffs = rates.coefficients()?;
    let mags = coeffs.magnitudes();
    let f_closed = fidelity_closed(kind, &mags);
    let f_sim = fidelity_simulated(kind, &coeffs).map_err(|e| e.to_string())?;
    let eta_closed = efficiency_closed(kind, &mags);
    let eta_sim = efficiency_simulated(kind, &coeffs).map_err(|e| e.to_string())?;
    println!(
        "gate: {}  g={} kappa_s={} gamma={}",
        kind.name(),
        fmt9(rates.g),
        fmt9(rates.kappa_s),
        fmt9(rates.gamma)
    );
    println!(
        "coefficients: |r|={} |t|={} |r0|={} |t0|={} X={}",
        fmt9(mags.r),
        fmt9(mags.t),
        fmt9(mags.r0),
        fmt9(mags.t0),
        fmt9(mags.mean_survival())
    );
    println!(
        "F   closed = {}   simulated = {}   |delta| = {:.3e}",
        fmt9(f_closed),
        fmt9(f_sim),
        (f_sim - f_closed).abs()
    );
    println!(
        "eta closed = {}   simulated = {}   |delta| = {:.3e}",
        fmt9(eta_closed),
        fmt9(eta_sim),
        (eta_sim - eta_closed).abs()
    );
    println!("closed forms are normative; simulated values are a cross-check.");
    println!("  fidelity convention: {FIDELITY_CONVENTION}");
    println!("  efficiency convention: {EFFICIENCY_CONVENTION}");
    if let (Some(tau), Some(t2)) = (tau, t2) {
        let params = DephasingParams { tau, t2 };
        params.validate().map_err(|e| e.to_string())?;
        let retention = dephasing_factor(&params);
        println!("exciton dephasing: retention exp(-tau/T2) = {}", fmt9(retention));
        println!(
            "  multiplicative reading: F * retention = {}",
            fmt9(f_closed * retention)
        );
        println!(
            "  subtractive reading:    F - (1 - retention) = {}",
            fmt9(f_closed - (1.0 - retention))
        );
        println!("  (the source forms leave the composition unspecified; both readings reported)");
    }
    Ok(())
}

fn parse_g_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad g value '{t}'")))
        .collect()
}

fn parse_kappa_s_values(text: &str) -> Result<Vec<f64>, String> {
    if let Some((start, rest)) = text.split_once(':') {
        let (stop, step) = rest
            .split_once(':')
            .ok_or_else(|| format!("bad range '{text}' (expected start:stop:step)"))?;
        let start: f64 = start.parse().map_err(|_| format!("bad range start '{start}'"))?;
        let stop: f64 = stop.parse().map_err(|_| format!("bad range stop '{stop}'"))?;
        let step: f64 = step.parse().map_err(|_| format!("bad range step '{step}'"))?;
        if step <= 0.0 || stop < start {
            return Err(format!("degenerate range '{text}'"));
        }
        let count = ((stop - start) / step).round() as usize;
        Ok((0..=count).map(|i| start + i as f64 * step).collect())
    } else {
        text.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad kappa_s value '{t}'"))
            })
            .collect()
    }
}

fn cmd_sweep(
    gate: &GateArg,
    g: &str,
    kappa_s: &str,
    gamma: f64,
    out: &PathBuf,
    format: &str,
) -> Result<(), String> {
    let kind = gate.kind()?;
    let grid = SweepGrid {
        g_values: parse_g_list(g)?,
        kappa_s_values: parse_kappa_s_values(kappa_s)?,
        gamma,
    };
    for &g in &grid.g_values {
        CavityParams::resonant(g, 0.0, gamma)
            .validate()
            .map_err(|e| e.to_string())?;
    }
    for &ks in &grid.kappa_s_values {
        CavityParams::resonant(1.0, ks, gamma)
            .validate()
            .map_err(|e| e.to_string())?;
    }
    let threads = std::env::var("CAVSIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    let result = sweep_with_threads(kind, &grid, threads).map_err(|e| e.to_string())?;
    let payload = match format {
        "csv" => result.to_csv(),
        "json" => result.to_json(),
        other => return Err(format!("unknown format '{other}' (expected csv|json)")),
    };
    std::fs::write(out, payload).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    println!(
        "wrote {} rows for {} to {}",
        result.rows.len(),
        kind.name(),
        out.display()
    );
    Ok(())
}

fn cmd_emit_circuit(gate: &GateArg, out: Option<&PathBuf>) -> Result<(), String> {
    let kind = gate.kind()?;
    let text = emit_circuit(&kind.build());
    match out {
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            println!("wrote {} circuit to {}", kind.name(), path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<bool, String> = match &cli.command {
        Command::Coeffs(rates) => cmd_coeffs(rates).map(|_| true),
        Command::Verify { gate, circuit } => cmd_verify(gate, circuit.as_ref()),
        Command::Trace {
            gate,
            model,
            g,
            kappa_s,
            gamma,
            seed,
            tuples,
        } => cmd_trace(gate, model, *g, *kappa_s, *gamma, *seed, *tuples),
        Command::Simulate { gate, rates, tau, t2 } => {
            cmd_simulate(gate, rates, *tau, *t2).map(|_| true)
        }
        Command::Sweep {
            gate,
            g,
            kappa_s,
            gamma,
            out,
            format,
        } => cmd_sweep(gate, g, kappa_s, *gamma, out, format).map(|_| true),
        Command::EmitCircuit { gate, out } => cmd_emit_circuit(gate, out.as_ref()).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
