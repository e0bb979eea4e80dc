//! Command-line front end.
//!
//! `stat` prints rates in columns, `record` writes them to a file, `live`
//! serves the browser view and `list` prints the event catalog. All
//! capturing modes also accept commands on the control pipe.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::mpsc::Sender;

use ccscope_core::fifo::{ControlFifo, DEFAULT_FIFO_PATH, FIFO_ENV};
use ccscope_core::render::StatRenderer;
use ccscope_core::{
    ControlCommand, ControlRequest, Engine, EngineConfig, EngineEvent, EngineHandle, EngineReport, IntervalMs,
    Registry, RegistryError, Sampler,
};
use ccscope_sensors::numachip::scenario::BUILTIN;
use ccscope_sensors::{kind_names, NumachipOptions, Scenario, SensorOptions, SENSOR_KINDS};
use clap::{Args, Parser, Subcommand};

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "ccscope",
    version,
    about = "Capture and visualize interconnect and kernel event rates"
)]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Debug)]
enum Mode {
    /// Print event rates as aligned columns
    Stat,
    /// Write frames to a recording file
    Record {
        /// Output file; defaults to --output or a timestamped name
        path: Option<PathBuf>,
    },
    /// Serve the live view over HTTP and websockets
    Live,
    /// List sensors, events and scenarios
    List,
}

#[derive(Args, Debug)]
struct Options {
    /// Comma-separated event mnemonics to enable
    #[arg(long, global = true, value_delimiter = ',')]
    events: Vec<String>,
    /// Enable every event of every present sensor
    #[arg(long, global = true)]
    all: bool,
    /// Sampling interval, e.g. 100 or 100ms
    #[arg(long, global = true, default_value = "1000ms", value_parser = parse_interval)]
    interval: IntervalMs,
    /// One column per interconnect instead of summing them
    #[arg(long, global = true)]
    discrete: bool,
    /// Recording file to open at startup
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Builtin scenario name or path to a scenario file
    #[arg(long, global = true, default_value = "balanced")]
    scenario: String,
    /// Seed for scenario jitter
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of simulated interconnects
    #[arg(long, global = true, default_value_t = ccscope_sensors::numachip::DEFAULT_SOURCES)]
    interconnects: usize,
    /// Report the 56 tag-cache stripes as separate events
    #[arg(long, global = true)]
    expose_stripes: bool,
    /// Sensor kinds to register, in order
    #[arg(long, global = true, value_delimiter = ',', default_value = "numachip,vmstat")]
    sensors: Vec<String>,
    #[arg(long, global = true, default_value = ccscope_sensors::vmstat::DEFAULT_PATH)]
    vmstat_path: PathBuf,
    /// Control pipe; falls back to $CCSCOPE_CTL, then /run/ccscope-ctl
    #[arg(long, global = true)]
    fifo: Option<PathBuf>,
    /// Do not open a control pipe
    #[arg(long, global = true)]
    no_fifo: bool,
    /// Address for the live view
    #[arg(long, global = true, default_value = ccscope_web::DEFAULT_LISTEN)]
    listen: String,
    /// Directory served under /recordings/ and used for client recordings
    #[arg(long, global = true, default_value = ".")]
    recordings_dir: PathBuf,
    /// Use mnemonics as column headings (default)
    #[arg(long, global = true, conflicts_with = "verbose_headings")]
    mnemonic: bool,
    /// Use full event descriptions as column headings
    #[arg(long, global = true)]
    verbose_headings: bool,
    /// Leave the capture thread unpinned
    #[arg(long, global = true)]
    no_pin: bool,
    /// Stop after this many frames
    #[arg(long, global = true)]
    samples: Option<u64>,
}

fn parse_interval(s: &str) -> Result<IntervalMs, String> {
    let digits = s.trim().strip_suffix("ms").unwrap_or(s).trim();
    let ms: u32 = digits
        .parse()
        .map_err(|_| format!("{s:?} is not a number of milliseconds"))?;
    IntervalMs::new(ms).map_err(|e| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("ccscope: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("ccscope: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let opts = &cli.opts;
    let registry = build_registry(opts)?;
    if let Mode::List = cli.mode {
        return list(&registry);
    }
    let needs_events = matches!(cli.mode, Mode::Stat | Mode::Record { .. });
    if needs_events && opts.events.is_empty() && !opts.all {
        return Err(Failure::Usage(
            "no events selected; pass --events a,b,c or --all".into(),
        ));
    }

    let mut sampler = Sampler::new(registry, opts.discrete);
    if opts.all {
        sampler.enable_all();
    } else if !opts.events.is_empty() {
        sampler.enable(&opts.events).map_err(|e| match e {
            RegistryError::UnknownEvent { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        })?;
    }
    let mut engine = Engine::new(
        sampler,
        EngineConfig {
            interval: opts.interval,
            pin_threads: !opts.no_pin,
            max_frames: opts.samples,
            ..Default::default()
        },
    );

    let output = match &cli.mode {
        Mode::Record { path } => Some(
            path.clone()
                .or_else(|| opts.output.clone())
                .unwrap_or_else(default_output),
        ),
        _ => opts.output.clone(),
    };
    if let Some(path) = &output {
        engine
            .apply(ControlCommand::Record(path.clone()).into())
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }

    match cli.mode {
        Mode::Stat => stat(engine, opts),
        Mode::Record { .. } => record(engine, opts, output.expect("record mode has a path")),
        Mode::Live => live(engine, opts),
        Mode::List => unreachable!(),
    }
}

fn default_output() -> PathBuf {
    PathBuf::from(format!("ccscope-{}.json", chrono::Local::now().format("%Y%m%d-%H%M%S")))
}

fn build_registry(opts: &Options) -> Result<Registry, Failure> {
    let scenario = Scenario::select(&opts.scenario, opts.interconnects).map_err(|e| Failure::Usage(e.to_string()))?;
    let options = SensorOptions {
        numachip: NumachipOptions {
            sources: opts.interconnects,
            scenario,
            seed: opts.seed,
            expose_stripes: opts.expose_stripes,
            initial_counter: 0,
        },
        vmstat_path: opts.vmstat_path.clone(),
    };
    let sensors = ccscope_sensors::build(&opts.sensors, &options).map_err(Failure::Usage)?;
    let mut registry = Registry::new();
    for sensor in sensors {
        let handle = registry.register(sensor).map_err(|e| Failure::Usage(e.to_string()))?;
        let d = registry.descriptor(handle);
        if !d.present {
            match registry.diagnostic(handle) {
                Some(why) => log::warn!("sensor {} unavailable: {why}", d.name),
                None => log::info!("sensor {} not present", d.name),
            }
        }
    }
    Ok(registry)
}

fn list(registry: &Registry) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    for (descriptor, events) in registry.catalog() {
        let state = if descriptor.present { "present" } else { "not present" };
        writeln!(
            out,
            "{} ({state}, {} sources, rate {})",
            descriptor.name, descriptor.sources, descriptor.rate
        )?;
        let width = events.iter().map(|e| e.mnemonic.len()).max().unwrap_or(0);
        for e in &events {
            if e.description == e.mnemonic {
                writeln!(out, "  {}", e.mnemonic)?;
            } else {
                writeln!(out, "  {:width$}  {}", e.mnemonic, e.description)?;
            }
        }
    }
    writeln!(out, "sensor kinds: {}", kind_names().join(", "))?;
    for k in SENSOR_KINDS {
        writeln!(out, "  {:8}  {}", k.name, k.summary)?;
    }
    writeln!(out, "scenarios: {} (or a scenario file)", BUILTIN.join(", "))?;
    Ok(())
}

/// Opens the control pipe and forwards its commands to the engine. An
/// explicitly requested pipe must open; the default location is optional
/// because it usually needs root.
fn attach_fifo(opts: &Options, control: Sender<ControlRequest>) -> Result<Option<ControlFifo>, Failure> {
    if opts.no_fifo {
        return Ok(None);
    }
    let (path, explicit) = match (&opts.fifo, std::env::var_os(FIFO_ENV)) {
        (Some(p), _) => (p.clone(), true),
        (None, Some(p)) => (PathBuf::from(p), true),
        (None, None) => (PathBuf::from(DEFAULT_FIFO_PATH), false),
    };
    let mut fifo = match ControlFifo::open(&path) {
        Ok(f) => f,
        Err(e) if explicit => return Err(Failure::Runtime(format!("control pipe {}: {e}", path.display()))),
        Err(e) => {
            log::info!("control pipe {} unavailable: {e}", path.display());
            return Ok(None);
        }
    };
    fifo.spawn_reader(move |cmd| control.send(cmd.into()).is_ok())?;
    log::info!("reading commands from {}", path.display());
    Ok(Some(fifo))
}

/// Starts the capture thread with its control pipe and interrupt handler.
/// If the pipe cannot be opened the thread is stopped again so an open
/// recording is closed cleanly.
fn start(engine: Engine, opts: &Options) -> Result<(EngineHandle, Option<ControlFifo>), Failure> {
    let handle = engine.spawn()?;
    let control = handle.control();
    match attach_fifo(opts, control.clone()) {
        Ok(fifo) => {
            install_interrupt(control);
            Ok((handle, fifo))
        }
        Err(e) => {
            handle.shutdown();
            Err(e)
        }
    }
}

fn install_interrupt(control: Sender<ControlRequest>) {
    let control = std::sync::Mutex::new(control);
    if let Err(e) = ctrlc::set_handler(move || {
        if let Ok(c) = control.lock() {
            let _ = c.send(ControlRequest::Shutdown);
        }
    }) {
        log::warn!("cannot install interrupt handler: {e}");
    }
}

fn finish_report(report: &EngineReport) {
    log::info!(
        "{} frames, {} persisted, {:.2}% of one core{}",
        report.frames,
        report.persisted,
        100.0 * report.utilization(),
        if report.pinned { ", pinned" } else { "" }
    );
}

fn stat(engine: Engine, opts: &Options) -> Result<(), Failure> {
    let describe = opts.verbose_headings && !opts.mnemonic;
    let headings = |layout: &ccscope_core::Layout| {
        if describe {
            layout.descriptions.clone()
        } else {
            layout.headings.clone()
        }
    };
    let mut renderer = StatRenderer::new(io::stdout().lock(), headings(&engine.layout()));
    let mut events = engine.subscribe();
    let (handle, _fifo) = start(engine, opts)?;
    let control = handle.control();
    let joiner = std::thread::spawn(move || handle.join());

    // The bus closes once the capture thread has exited.
    loop {
        match events.blocking_recv() {
            Ok(EngineEvent::Frame(frame)) => {
                let written = match &frame.label {
                    Some(label) => renderer.write_note(label).and_then(|_| renderer.write_frame(&frame)),
                    None => renderer.write_frame(&frame),
                };
                if let Err(e) = written {
                    if e.kind() != io::ErrorKind::BrokenPipe {
                        log::error!("writing output: {e}");
                    }
                    let _ = control.send(ControlRequest::Shutdown);
                    break;
                }
            }
            Ok(EngineEvent::Layout(layout)) => renderer.set_headings(headings(&layout)),
            Ok(EngineEvent::IntervalChanged(i)) => log::info!("interval now {i}"),
            Ok(EngineEvent::Label(_)) => {}
            Err(tokio::sync::broadcast::error::RecvError::Lagged(n)) => {
                log::warn!("terminal fell behind; {n} frames skipped")
            }
            Err(tokio::sync::broadcast::error::RecvError::Closed) => break,
        }
    }
    let report = joiner.join().unwrap_or_default();
    finish_report(&report);
    Ok(())
}

fn record(engine: Engine, opts: &Options, path: PathBuf) -> Result<(), Failure> {
    let (handle, _fifo) = start(engine, opts)?;
    eprintln!("recording to {}", path.display());
    let report = handle.join();
    finish_report(&report);
    eprintln!("{} frames captured, {} written", report.frames, report.persisted);
    Ok(())
}

fn live(engine: Engine, opts: &Options) -> Result<(), Failure> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .thread_name("ccscope-web")
        .enable_all()
        .build()?;
    let layout = engine.layout();
    let interval = engine.state().interval;
    let events = engine.subscribe();
    let (handle, _fifo) = start(engine, opts)?;
    let control = handle.control();
    let server = runtime
        .block_on(ccscope_web::LiveServer::bind(
            &opts.listen,
            &layout,
            interval,
            events,
            control.clone(),
            ccscope_web::WebConfig {
                recordings_dir: opts.recordings_dir.clone(),
            },
        ))
        .map_err(|e| Failure::Runtime(format!("cannot listen on {}: {e}", opts.listen)));
    let server = match server {
        Ok(s) => s,
        Err(e) => {
            handle.shutdown();
            return Err(e);
        }
    };
    let addr = server.local_addr()?;
    eprintln!("live view at http://{addr}/");
    let joiner = std::thread::spawn(move || handle.join());
    // Serving stops when the capture thread exits and the bus closes.
    runtime.block_on(server.serve(std::future::pending()))?;
    let report = joiner.join().unwrap_or_default();
    finish_report(&report);
    Ok(())
}
