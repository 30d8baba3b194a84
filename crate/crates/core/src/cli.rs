//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | usage: bad flags, parameters, or configuration |
//! | 3 | parse error in an input file (including empty input) |
//! | 4 | validation error in input data |
//! | 5 | insufficient data |
//! | 6 | insufficient history for signal evaluation |
//! | 7 | I/O error |
//! | 8 | numerical failure (degenerate window or regression, no crossing, generation) |

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::dfa::{fluctuation_function, Coverage, DfaConfig, ObservationWindow};
use crate::error::{HlocError, Result};
use crate::io;
use crate::signals::{
    extrapolate_trend, fit_hloc_trend, measure_correction, signal_timeline,
    slope_correction_regression, SignalThresholds, Verdict, DEFAULT_HORIZON,
};
use crate::synth::{fbm_price_series, generate_crash_catalog, DropSchedule, FbmSpec, FgnMethod, RNG_NAME};
use crate::track::{sliding_hurst_with, Execution};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_INSUFFICIENT_DATA: i32 = 5;
pub const EXIT_INSUFFICIENT_HISTORY: i32 = 6;
pub const EXIT_IO: i32 = 7;
pub const EXIT_NUMERICAL: i32 = 8;

pub fn exit_code(err: &HlocError) -> i32 {
    use HlocError::*;
    match err {
        InvalidScale { .. } | InvalidConfig(_) | InvalidParameter(_) | InvalidProfile(_) => EXIT_USAGE,
        Parse { .. } | EmptyInput => EXIT_PARSE,
        Validation { .. } | InvalidData(_) => EXIT_VALIDATION,
        InsufficientData { .. } | InsufficientScales { .. } => EXIT_INSUFFICIENT_DATA,
        InsufficientHistory { .. } => EXIT_INSUFFICIENT_HISTORY,
        Io(_) => EXIT_IO,
        DegenerateWindow | DegenerateRegression(_) | NoCrossing { .. } | Generation(_) | Internal(_) => {
            EXIT_NUMERICAL
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hloc", version, about = "Local Hurst exponent tracking and crash-warning signals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the sliding local Hurst exponent track of a price series.
    Track(TrackArgs),
    /// Evaluate the sell/buy conditions along a track.
    Signal(SignalArgs),
    /// Measure crash corrections and regress them on the h_loc trend slope.
    CrashReport(CrashReportArgs),
    /// Write a synthetic fBm or crash fixture series.
    Synth(SynthArgs),
    /// Fit a straight line to h_loc over a session window.
    FitTrend(FitTrendArgs),
    /// Extrapolate a fitted h_loc trend to a target level.
    Extrapolate(ExtrapolateArgs),
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Observation box length N in sessions.
    #[arg(long, default_value_t = 215)]
    pub window_len: usize,
    #[arg(long, default_value_t = 4)]
    pub tau_min: usize,
    /// Largest box size; defaults to window_len / 4.
    #[arg(long)]
    pub tau_max: Option<usize>,
    /// Lower bound of the scaling range; defaults to tau_min.
    #[arg(long)]
    pub scale_lo: Option<usize>,
    /// Upper bound of the scaling range; defaults to tau_max.
    #[arg(long)]
    pub scale_hi: Option<usize>,
    /// Integrate mean-subtracted values before detrending.
    #[arg(long)]
    pub integrate: bool,
    #[arg(long, default_value_t = 1)]
    pub detrend_order: usize,
    /// Drop the oldest remainder instead of adding an overlapping tail box.
    #[arg(long)]
    pub truncate_tail: bool,
    /// Also write per-session (ln tau, ln F²) pairs to this file.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Estimate windows on a single thread.
    #[arg(long)]
    pub serial: bool,
}

impl TrackArgs {
    pub fn dfa_config(&self) -> DfaConfig {
        let tau_max = self.tau_max.unwrap_or(self.window_len / 4);
        let mut cfg = DfaConfig::new(self.window_len)
            .with_tau_bounds(self.tau_min, tau_max)
            .with_detrend_order(self.detrend_order)
            .with_integrated_profile(self.integrate);
        cfg = cfg.with_scaling_range(
            self.scale_lo.unwrap_or(self.tau_min),
            self.scale_hi.unwrap_or(tau_max),
        );
        if self.truncate_tail {
            cfg = cfg.with_coverage(Coverage::TruncateTail);
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 0.5)]
    pub ma21_ceiling: f64,
    #[arg(long, default_value_t = 0.45)]
    pub ma5_ceiling: f64,
    #[arg(long, default_value_t = 0.4)]
    pub minima_ceiling: f64,
    #[arg(long, default_value_t = 21)]
    pub trend_lookback: usize,
    #[arg(long, default_value_t = 10)]
    pub cross_lookback: usize,
    #[arg(long, default_value_t = 0.8)]
    pub cross_fraction: f64,
    #[arg(long, default_value_t = 2)]
    pub minima_count: usize,
}

impl ThresholdArgs {
    pub fn thresholds(&self) -> SignalThresholds {
        SignalThresholds {
            ma21_ceiling: self.ma21_ceiling,
            ma5_ceiling: self.ma5_ceiling,
            minima_ceiling: self.minima_ceiling,
            trend_lookback: self.trend_lookback,
            cross_lookback: self.cross_lookback,
            cross_fraction: self.cross_fraction,
            minima_count: self.minima_count,
        }
    }
}

#[derive(Debug, Args)]
pub struct SignalArgs {
    #[arg(long)]
    pub track: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Debug, Args)]
pub struct CrashReportArgs {
    #[arg(long)]
    pub series: PathBuf,
    /// Rupture session; repeat or comma-separate for several events.
    #[arg(long = "rupture", required = true, value_delimiter = ',')]
    pub ruptures: Vec<usize>,
    /// Track file used for the h_loc trend slopes.
    #[arg(long)]
    pub track: Option<PathBuf>,
    /// Inclusive trend-fit window `start:end`, one per rupture, in order.
    #[arg(long = "fit-window", value_parser = parse_window)]
    pub fit_windows: Vec<(usize, usize)>,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub output: PathBuf,
    /// Hurst exponent of the fBm fixture, in (0, 1).
    #[arg(long, conflicts_with = "crash")]
    pub hurst: Option<f64>,
    #[arg(long, default_value_t = 4096)]
    pub length: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Standard deviation of one fBm increment.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Lowest close of the fBm price series.
    #[arg(long, default_value_t = 100.0)]
    pub floor: f64,
    /// Crash segment `INITIAL:TOTAL:DURATION` (fractions and sessions); repeatable.
    #[arg(long, value_parser = parse_crash)]
    pub crash: Vec<(f64, f64, usize)>,
    /// Sessions of rising path before each crash.
    #[arg(long, default_value_t = 100)]
    pub pre_len: usize,
    /// Close at each rupture.
    #[arg(long, default_value_t = 100.0)]
    pub base: f64,
    /// Sessions of rebound after each crash minimum.
    #[arg(long, default_value_t = 20)]
    pub rebound: usize,
}

#[derive(Debug, Args)]
pub struct FitTrendArgs {
    #[arg(long)]
    pub track: PathBuf,
    #[arg(long)]
    pub start: usize,
    #[arg(long)]
    pub end: usize,
}

#[derive(Debug, Args)]
pub struct ExtrapolateArgs {
    #[arg(long)]
    pub track: PathBuf,
    #[arg(long)]
    pub start: usize,
    #[arg(long)]
    pub end: usize,
    #[arg(long, default_value_t = 0.4)]
    pub target: f64,
}

fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected START:END")?;
    let a = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

fn parse_crash(s: &str) -> std::result::Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected INITIAL:TOTAL:DURATION".into());
    }
    let initial = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let total = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    let duration = parts[2].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((initial, total, duration))
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(&cli.command, &mut stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn execute<W: Write>(cmd: &Command, out: &mut W) -> Result<()> {
    match cmd {
        Command::Track(a) => cmd_track(a, out),
        Command::Signal(a) => cmd_signal(a, out),
        Command::CrashReport(a) => cmd_crash_report(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::FitTrend(a) => cmd_fit_trend(a, out),
        Command::Extrapolate(a) => cmd_extrapolate(a, out),
    }
}

fn cmd_track<W: Write>(args: &TrackArgs, out: &mut W) -> Result<()> {
    let config = args.dfa_config();
    config.validate()?;
    let series = io::read_series_path(&args.input)?;
    let exec = if args.serial {
        Execution::Serial
    } else {
        Execution::Parallel
    };
    let track = sliding_hurst_with(&series, &config, exec)?;
    io::write_track_path(&track, &args.output)?;

    if let Some(path) = &args.curves {
        let closes = series.closes();
        let mut curves = Vec::with_capacity(track.len());
        for e in track.entries() {
            let window = ObservationWindow::ending_at(closes, e.session, config.window_len)?;
            match fluctuation_function(&window, &config) {
                Ok(c) => curves.push((e.session, c)),
                Err(HlocError::DegenerateWindow) => {}
                Err(err) => return Err(err),
            }
        }
        io::write_curves(&curves, File::create(path)?)?;
    }

    let ok = track.entries().iter().filter(|e| e.h_loc.is_some()).count();
    writeln!(
        out,
        "wrote {} sessions ({} ok, {} gap) to {}",
        track.len(),
        ok,
        track.len() - ok,
        args.output.display()
    )?;
    Ok(())
}

fn cmd_signal<W: Write>(args: &SignalArgs, out: &mut W) -> Result<()> {
    let thresholds = args.thresholds.thresholds();
    thresholds.validate()?;
    let track = io::read_track_path(&args.track)?;
    let timeline = signal_timeline(&track, &thresholds)?;
    if timeline.is_empty() {
        return Err(HlocError::InsufficientHistory {
            session: track.last_session().unwrap_or(0),
            reason: "no session of the track can be evaluated".into(),
        });
    }
    io::write_signals(&timeline, File::create(&args.output)?)?;

    let count = |v: Verdict| timeline.iter().filter(|s| s.verdict == v).count();
    match timeline.iter().find(|s| s.verdict == Verdict::Sell) {
        Some(s) => writeln!(out, "first sell onset: session {}", s.session)?,
        None => writeln!(out, "first sell onset: none")?,
    }
    writeln!(
        out,
        "sessions evaluated: {} (sell {}, buy {}, neutral {})",
        timeline.len(),
        count(Verdict::Sell),
        count(Verdict::Buy),
        count(Verdict::Neutral)
    )?;
    Ok(())
}

fn cmd_crash_report<W: Write>(args: &CrashReportArgs, out: &mut W) -> Result<()> {
    let series = io::read_series_path(&args.series)?;
    let track = args.track.as_deref().map(io::read_track_path).transpose()?;
    if track.is_some() && args.fit_windows.len() != args.ruptures.len() {
        return Err(HlocError::InvalidParameter(format!(
            "{} ruptures but {} fit windows",
            args.ruptures.len(),
            args.fit_windows.len()
        )));
    }
    if track.is_none() && !args.fit_windows.is_empty() {
        return Err(HlocError::InvalidParameter("fit windows need --track".into()));
    }

    // all events are measured before anything is written
    let mut rows = Vec::with_capacity(args.ruptures.len());
    for (i, &rupture) in args.ruptures.iter().enumerate() {
        let event = measure_correction(&series, rupture, args.horizon)?;
        let slope = match &track {
            Some(t) => Some(fit_hloc_trend(t, args.fit_windows[i])?.slope),
            None => None,
        };
        rows.push((event, slope));
    }

    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|(ev, s)| s.map(|s| (s, ev.total_drop)))
        .collect();
    let model = if track.is_none() {
        None
    } else if points.len() < 2 {
        eprintln!(
            "warning: {} event(s) with a trend slope; the slope-correction regression needs at least 2",
            points.len()
        );
        None
    } else {
        let m = slope_correction_regression(&points)?;
        if m.low_confidence {
            eprintln!("warning: regression rests on {} points only", m.n_points);
        }
        Some(m)
    };

    io::write_crash_report(&rows, model.as_ref(), File::create(&args.output)?)?;
    for (ev, _) in &rows {
        writeln!(
            out,
            "rupture {}: initial 3-session drop {}, total drop {} ({} sessions)",
            ev.rupture_session, ev.initial_3session_drop, ev.total_drop, ev.duration
        )?;
    }
    if let Some(m) = model {
        writeln!(
            out,
            "regression: a={} b={} r_squared={} n={}",
            io::format_sig(m.a),
            io::format_sig(m.b),
            io::format_sig(m.r_squared),
            m.n_points
        )?;
    }
    Ok(())
}

fn cmd_synth<W: Write>(args: &SynthArgs, out: &mut W) -> Result<()> {
    if !args.crash.is_empty() {
        let schedules = args
            .crash
            .iter()
            .map(|&(initial, total, duration)| DropSchedule::crash(initial, total, duration, args.rebound))
            .collect::<Result<Vec<_>>>()?;
        let (series, ruptures) = generate_crash_catalog(args.pre_len, &schedules, args.base)?;
        let segments: Vec<String> = args
            .crash
            .iter()
            .map(|(i, t, d)| format!("{i}:{t}:{d}"))
            .collect();
        let ruptures_txt: Vec<String> = ruptures.iter().map(|r| r.to_string()).collect();
        let meta = [
            ("generator", "crash-catalog".to_string()),
            ("crashes", segments.join(",")),
            ("rupture_sessions", ruptures_txt.join(",")),
            ("pre_len", args.pre_len.to_string()),
            ("base", args.base.to_string()),
            ("rebound", args.rebound.to_string()),
        ];
        io::write_series_path(&series, &meta, &args.output)?;
        writeln!(out, "rupture sessions: {}", ruptures_txt.join(","))?;
        return Ok(());
    }

    let hurst = args
        .hurst
        .ok_or_else(|| HlocError::InvalidParameter("either --hurst or --crash is required".into()))?;
    let spec = FbmSpec {
        hurst,
        length: args.length,
        seed: args.seed,
        scale: args.scale,
    };
    spec.validate()?;
    let series = fbm_price_series(&spec, args.floor)?;
    let meta = [
        ("generator", format!("fbm/{}", FgnMethod::DaviesHarte.name())),
        ("fallback", FgnMethod::Hosking.name().to_string()),
        ("rng", RNG_NAME.to_string()),
        ("seed", args.seed.to_string()),
        ("hurst", hurst.to_string()),
        ("length", args.length.to_string()),
        ("scale", args.scale.to_string()),
        ("floor", args.floor.to_string()),
    ];
    io::write_series_path(&series, &meta, &args.output)?;
    writeln!(out, "wrote {} sessions to {}", series.len(), args.output.display())?;
    Ok(())
}

fn cmd_fit_trend<W: Write>(args: &FitTrendArgs, out: &mut W) -> Result<()> {
    let track = io::read_track_path(&args.track)?;
    let fit = fit_hloc_trend(&track, (args.start, args.end))?;
    writeln!(out, "slope={}", io::format_sig(fit.slope))?;
    writeln!(out, "intercept={}", io::format_sig(fit.intercept))?;
    writeln!(out, "r_squared={}", io::format_sig(fit.r_squared))?;
    writeln!(out, "fit_window={}:{}", fit.fit_window.0, fit.fit_window.1)?;
    Ok(())
}

fn cmd_extrapolate<W: Write>(args: &ExtrapolateArgs, out: &mut W) -> Result<()> {
    let track = io::read_track_path(&args.track)?;
    let fit = fit_hloc_trend(&track, (args.start, args.end))?;
    let session = extrapolate_trend(&fit, args.target)?;
    writeln!(out, "slope={}", io::format_sig(fit.slope))?;
    writeln!(out, "target={}", args.target)?;
    writeln!(out, "crossing_session={session}")?;
    Ok(())
}
