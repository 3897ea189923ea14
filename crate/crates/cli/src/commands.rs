use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use aimq::config::{defaults_hash, AimqConfig};
use aimq::encoding::{binary_label, conversion_table, one_hot_encode};
use aimq::engine::{
    simulate, tracking_metrics, write_trace_csv, ReconstructionMode, SimConfig, TrackingMetrics,
};
use aimq::ladder::{raw_output, select_level, LadderState};
use aimq::power::{
    aimq_total_power, iso_amp_total_power, power_ratio, summarize_power, PowerReport,
};
use aimq::signal::{load_trace, BusTrace, RNG_NAME};
use aimq::Error;

use crate::args::{Cli, Command, EncodeArgs, PowerArgs, SimulateArgs, StaircaseArgs};

/// Steady-power band the default experiment is expected to land in, watts.
const EXPECTED_BAND: (f64, f64) = (0.10, 0.20);

#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration.
    Usage(String),
    /// Filesystem trouble.
    Io(String),
    /// The run completed but a built-in check did not hold.
    Check(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Check(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type CmdResult = Result<(), Failure>;

pub fn run(cli: Cli) -> CmdResult {
    if cli.version {
        println!(
            "aimq {} (defaults v{} sha256:{})",
            env!("CARGO_PKG_VERSION"),
            AimqConfig::defaults().version,
            defaults_hash()
        );
        return Ok(());
    }
    let mut config = match &cli.config {
        Some(path) => AimqConfig::load(path)?,
        None => AimqConfig::defaults(),
    };
    if let Some(Command::Simulate(args)) = &cli.command {
        apply_simulate_overrides(&mut config, args)?;
    }
    if let Some(Command::PowerCompare(args)) = &cli.command {
        apply_power_overrides(&mut config, args);
    }
    if cli.dump_config {
        print!("{}", config.to_toml_string());
        return Ok(());
    }
    match cli.command {
        Some(Command::Simulate(args)) => cmd_simulate(&config, &args, &cli.out_dir),
        Some(Command::Staircase(args)) => cmd_staircase(&config, &args, &cli.out_dir),
        Some(Command::PowerCompare(_)) => cmd_power_compare(&config),
        Some(Command::Encode(args)) => cmd_encode(&args),
        None => Err(Failure::Usage(
            "no command given; try `aimq --help`".to_string(),
        )),
    }
}

fn apply_simulate_overrides(config: &mut AimqConfig, args: &SimulateArgs) -> CmdResult {
    if let Some(seed) = args.seed {
        config.signal.seed = seed;
    }
    if let Some(steps) = args.steps {
        config.signal.steps = steps;
    }
    if let Some(v0) = args.v0 {
        config.signal.v0 = v0;
    }
    if let Some(t_s) = args.t_s {
        config.signal.t_s = t_s;
    }
    config.validate()?;
    Ok(())
}

fn apply_power_overrides(config: &mut AimqConfig, args: &PowerArgs) {
    let p = &mut config.power;
    let pairs = [
        (&mut p.v_pri, args.v_pri),
        (&mut p.i_b, args.i_b),
        (&mut p.v_iso, args.v_iso),
        (&mut p.i_pri, args.i_pri),
        (&mut p.eta, args.eta),
        (&mut p.i_zf, args.i_zf),
        (&mut p.v_sec, args.v_sec),
        (&mut p.i_sec, args.i_sec),
        (&mut p.i_out, args.i_out),
    ];
    for (slot, value) in pairs {
        if let Some(v) = value {
            *slot = v;
        }
    }
}

fn create_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

struct RunOutcome {
    label: String,
    power: PowerReport,
    threshold: Option<TrackingMetrics>,
    scaled: Option<TrackingMetrics>,
    files: Vec<PathBuf>,
}

struct RunPaths {
    trace: PathBuf,
    report: PathBuf,
    power_csv: PathBuf,
}

fn run_one(
    sim: &SimConfig,
    bus: &BusTrace,
    source: &str,
    paths: &RunPaths,
) -> Result<RunOutcome, Failure> {
    let trace = simulate(sim, bus)?;
    let power = summarize_power(&trace);
    let threshold = tracking_metrics(&trace, sim, ReconstructionMode::Threshold).ok();
    let scaled = tracking_metrics(&trace, sim, ReconstructionMode::Scaled).ok();

    write_trace_csv(&trace, &paths.trace)?;
    write_file(&paths.power_csv, &power.to_csv())?;

    let mut report = String::new();
    writeln!(
        report,
        "aimq {} simulation report",
        env!("CARGO_PKG_VERSION")
    )
    .unwrap();
    writeln!(report, "source        {source}").unwrap();
    writeln!(report, "rng           {RNG_NAME}").unwrap();
    writeln!(report, "defaults      sha256:{}", defaults_hash()).unwrap();
    writeln!(
        report,
        "bus           {} samples at {} s, held for {} engine steps of {} s",
        bus.len(),
        bus.sample_interval,
        sim.hold_steps(bus.sample_interval)?,
        sim.engine_dt
    )
    .unwrap();
    writeln!(report, "rows          {}", trace.len()).unwrap();
    report.push('\n');
    report.push_str(&power.to_text());
    report.push('\n');
    report.push_str("tracking (after settling, transition rows excluded)\n");
    for (name, m) in [("threshold", &threshold), ("scaled", &scaled)] {
        match m {
            Some(m) => writeln!(
                report,
                "  {name:<9}   max {:.4} V  mean {:.4} V  over {} rows",
                m.max_abs_error, m.mean_abs_error, m.samples_evaluated
            )
            .unwrap(),
            None => writeln!(
                report,
                "  {name:<9}   n/a (trace shorter than settling window)"
            )
            .unwrap(),
        }
    }
    write_file(&paths.report, &report)?;

    Ok(RunOutcome {
        label: source.to_string(),
        power,
        threshold,
        scaled,
        files: vec![
            paths.trace.clone(),
            paths.report.clone(),
            paths.power_csv.clone(),
        ],
    })
}

fn print_summary(outcome: &RunOutcome) {
    let p = &outcome.power;
    println!("{}", outcome.label);
    match p.steady_band {
        Some((lo, hi)) => {
            let inside = lo >= EXPECTED_BAND.0 && hi <= EXPECTED_BAND.1;
            println!(
                "  steady power  {:.4} .. {:.4} W ({} {:.2}..{:.2} W)",
                lo,
                hi,
                if inside { "within" } else { "outside" },
                EXPECTED_BAND.0,
                EXPECTED_BAND.1
            );
        }
        None => println!("  steady power  none"),
    }
    println!(
        "  mean/peak     {:.4} / {:.4} W",
        p.mean_primary_power, p.peak_primary_power
    );
    println!(
        "  spikes        {} ({:.3}% of rows)",
        p.spike_count,
        100.0 * p.transition_fraction
    );
    if let Some(m) = outcome.threshold {
        println!(
            "  tracking      max {:.3} V, mean {:.3} V (threshold mode)",
            m.max_abs_error, m.mean_abs_error
        );
    }
    if let Some(m) = outcome.scaled {
        println!(
            "                max {:.3} V, mean {:.3} V (scaled mode)",
            m.max_abs_error, m.mean_abs_error
        );
    }
    for f in &outcome.files {
        println!("  wrote         {}", f.display());
    }
}

fn cmd_simulate(config: &AimqConfig, args: &SimulateArgs, out_dir: &Path) -> CmdResult {
    let sim = config.sim_config()?;
    create_dir(out_dir)?;

    if let Some((first, last)) = args.seeds {
        let runs: Vec<Result<RunOutcome, Failure>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (first..=last)
                .map(|seed| {
                    let sim = &sim;
                    scope.spawn(move || {
                        let mut c = config.clone();
                        c.signal.seed = seed;
                        let bus = c.bus_trace()?;
                        let paths = RunPaths {
                            trace: out_dir.join(format!("trace_seed{seed}.csv")),
                            report: out_dir.join(format!("report_seed{seed}.txt")),
                            power_csv: out_dir.join(format!("power_seed{seed}.csv")),
                        };
                        run_one(sim, &bus, &format!("random walk, seed {seed}"), &paths)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation thread panicked"))
                .collect()
        });
        for run in runs {
            print_summary(&run?);
        }
        return Ok(());
    }

    let (bus, source) = match &args.input {
        Some(path) => (load_trace(path)?, format!("trace file {}", path.display())),
        None => (
            config.bus_trace()?,
            format!(
                "random walk, seed {}, v0 {} V, {} steps",
                config.signal.seed, config.signal.v0, config.signal.steps
            ),
        ),
    };
    let paths = RunPaths {
        trace: args
            .output
            .clone()
            .unwrap_or_else(|| out_dir.join("trace.csv")),
        report: out_dir.join("report.txt"),
        power_csv: out_dir.join("power.csv"),
    };
    let outcome = run_one(&sim, &bus, &source, &paths)?;
    print_summary(&outcome);
    Ok(())
}

fn cmd_staircase(config: &AimqConfig, args: &StaircaseArgs, out_dir: &Path) -> CmdResult {
    if !(args.step > 0.0 && args.step.is_finite()) {
        return Err(Failure::Usage(format!(
            "--step must be positive, got {}",
            args.step
        )));
    }
    let ladder = config.ladder.build()?;
    let top = ladder.channels[ladder.len() - 1].threshold() + 10.0;
    let count = (top / args.step).round() as usize;

    let mut csv = String::from("v_in,level,v_out\n");
    let mut prev_level = 0;
    let mut monotone = true;
    let mut steps_at = Vec::new();
    for i in 0..=count {
        let v = i as f64 * args.step;
        let level = select_level(v, &ladder);
        let v_out = raw_output(&LadderState::settled(level), &ladder);
        if level < prev_level {
            monotone = false;
        }
        if level > prev_level {
            steps_at.push((level, v));
        }
        prev_level = level;
        writeln!(csv, "{v},{level},{v_out}").unwrap();
    }

    create_dir(out_dir)?;
    let path = out_dir.join("staircase.csv");
    write_file(&path, &csv)?;

    let thresholds = ladder.thresholds();
    let spacings: Vec<f64> = thresholds.windows(2).map(|w| w[1] - w[0]).collect();
    println!(
        "swept 0 .. {top} V in {} V steps ({} points)",
        args.step,
        count + 1
    );
    println!("distinct nonzero levels: {}", steps_at.len());
    for (level, v) in &steps_at {
        println!("  level {level} from {v:.4} V");
    }
    if let (Some(lo), Some(hi)) = (
        spacings.iter().copied().reduce(f64::min),
        spacings.iter().copied().reduce(f64::max),
    ) {
        if (hi - lo).abs() < 1e-9 {
            println!("LSB spacing: {lo} V");
        } else {
            println!("LSB spacing: {lo} .. {hi} V");
        }
    }
    println!("monotone: {}", if monotone { "yes" } else { "NO" });
    println!("wrote {}", path.display());
    if monotone {
        Ok(())
    } else {
        Err(Failure::Check("staircase is not monotone".to_string()))
    }
}

fn cmd_power_compare(config: &AimqConfig) -> CmdResult {
    let iso = config.iso_budget();
    let aimq = config.aimq_budget();
    iso.validate()?;
    aimq.validate()?;
    let iso_total = iso_amp_total_power(&iso)?;
    let aimq_total = aimq_total_power(&aimq);
    let full = power_ratio(&iso, &aimq, false)?;
    let simple = power_ratio(&iso, &aimq, true)?;
    println!("isolation amplifier total  {iso_total:.6e} W");
    println!("quantizer total            {aimq_total:.6e} W");
    println!("ratio (full)               {full:.7} (1/{:.2})", 1.0 / full);
    println!(
        "ratio (secondary dropped)  {simple:.7} (1/{:.2})",
        1.0 / simple
    );
    println!(
        "secondary term negligible  {}",
        if aimq.secondary_negligible() {
            "yes"
        } else {
            "no"
        }
    );
    Ok(())
}

fn cmd_encode(args: &EncodeArgs) -> CmdResult {
    if let Some(n) = args.table {
        for row in conversion_table(n)? {
            println!("{row}");
        }
        return Ok(());
    }
    match (args.level, args.width) {
        (Some(level), Some(width)) => {
            let word = one_hot_encode(level, width)?;
            println!("{} -> {}", binary_label(level, width), word);
            Ok(())
        }
        _ => Err(Failure::Usage(
            "encode needs --level and --width, or --table N".to_string(),
        )),
    }
}
