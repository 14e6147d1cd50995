use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use polyrv::adapter::demo::{run_mailer, MailerOptions};
use polyrv::compiler::{PluginRegistry, PluginError};
use polyrv::monitor::{Monitor, MonitorOptions};
use polyrv::wire::DEFAULT_PORT;
use polyrv::{parse_spec, split_spec, validate_spec, CentralConfig, SpecAst};

#[derive(Parser)]
#[command(name = "polyrv", version, about = "Split, run and exercise runtime-verification scripts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a script and print every violated rule.
    Validate { spec: PathBuf },
    /// Write the central config, component manifests and listener stubs.
    Compile {
        spec: PathBuf,
        /// Stub technologies: `label=tech` pairs, or bare names assigned to
        /// the labels in sorted order (one bare name covers every label).
        #[arg(long, value_delimiter = ',')]
        plugins: Vec<String>,
        /// Output directory; defaults to the script's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the central monitor on a compiled config.
    Monitor {
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Also append verdict lines to this file.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Write one line per wire message to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run demo components against a running monitor.
    Demo {
        scenario: Scenario,
        #[arg(long, env = "POLYRV_MONITOR", default_value = "127.0.0.1:7483")]
        monitor: String,
        /// Drop one recipient from the file the C side parses.
        #[arg(long)]
        corrupt_count: bool,
        /// Blacklist this recipient after the mailing has started.
        #[arg(long, value_name = "ID")]
        late_blacklist: Option<String>,
        #[arg(long, default_value_t = 5)]
        recipients: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Mailer,
}

/// Failure with its exit code: 1 for bad input, 2 for runtime trouble.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Validate { spec } => validate(&spec),
        Command::Compile { spec, plugins, out } => compile(&spec, &plugins, out.as_deref()),
        Command::Monitor { config, port, host, log, trace } => monitor(&config, &host, port, log, trace),
        Command::Demo { scenario: Scenario::Mailer, monitor, corrupt_count, late_blacklist, recipients } => {
            let options = MailerOptions { recipients, corrupt_count, late_blacklist, ..Default::default() };
            run_mailer(monitor.as_str(), &options)
                .map(|run| println!("announced {} recipients, created {} mails", run.announced, run.mails_created.len()))
                .map_err(|e| Failure::runtime(e.to_string()))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("polyrv: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn load_valid(path: &Path) -> Result<SpecAst, Failure> {
    let ast = parse_spec(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let report = validate_spec(&ast);
    if !report.is_empty() {
        print!("{report}");
        return Err(Failure::input(format!("{}: {} violation(s)", path.display(), report.len())));
    }
    Ok(ast)
}

fn validate(path: &Path) -> Result<(), Failure> {
    let ast = load_valid(path)?;
    let rules: usize = ast.upons.iter().map(|u| u.rules.len()).sum();
    println!("{}: valid ({} upon blocks, {rules} rules)", path.display(), ast.upons.len());
    Ok(())
}

/// Resolves `--plugins` into a technology per component label.
fn assign_plugins(labels: &[String], specs: &[String]) -> Result<Vec<(String, String)>, Failure> {
    let mut assigned: Vec<(String, String)> = Vec::new();
    let mut bare = Vec::new();
    for spec in specs.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        match spec.split_once('=') {
            Some((label, tech)) => {
                if !labels.iter().any(|l| l == label) {
                    return Err(Failure::input(format!("--plugins: unknown component `{label}`")));
                }
                if assigned.iter().any(|(l, _)| l == label) {
                    return Err(Failure::input(format!("--plugins: component `{label}` assigned twice")));
                }
                assigned.push((label.to_string(), tech.to_string()));
            }
            None => bare.push(spec.to_string()),
        }
    }
    let rest: Vec<&String> = labels.iter().filter(|l| !assigned.iter().any(|(a, _)| a == *l)).collect();
    match bare.len() {
        0 => {}
        1 => assigned.extend(rest.into_iter().map(|l| (l.clone(), bare[0].clone()))),
        n if n == rest.len() => assigned.extend(rest.into_iter().cloned().zip(bare)),
        n => {
            return Err(Failure::input(format!(
                "--plugins: {n} technologies for {} unassigned components ({})",
                rest.len(),
                rest.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            )))
        }
    }
    assigned.sort();
    Ok(assigned)
}

fn compile(path: &Path, plugins: &[String], out: Option<&Path>) -> Result<(), Failure> {
    let ast = load_valid(path)?;
    let (config, manifests) = split_spec(&ast).map_err(|e| Failure::input(e.to_string()))?;
    let labels: Vec<String> = manifests.iter().map(|m| m.component_label.clone()).collect();
    let assignment = assign_plugins(&labels, plugins)?;
    let registry = PluginRegistry::with_builtins();
    let mut stubs = Vec::new();
    for (label, tech) in &assignment {
        let manifest = manifests.iter().find(|m| &m.component_label == label).expect("assigned labels exist");
        let plugin = registry.get(tech).map_err(|e| Failure::input(plugin_message(e, &registry)))?;
        let source = registry.generate(tech, manifest).map_err(|e| Failure::input(e.to_string()))?;
        stubs.push((label.clone(), plugin.extension().to_string(), source));
    }

    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("spec");
    fs::create_dir_all(if dir.as_os_str().is_empty() { Path::new(".") } else { &dir })
        .map_err(|e| Failure::runtime(format!("{}: {e}", dir.display())))?;
    let write = |name: String, text: &str| -> Result<(), Failure> {
        let target = dir.join(name);
        fs::write(&target, text).map_err(|e| Failure::runtime(format!("{}: {e}", target.display())))?;
        println!("wrote {}", target.display());
        Ok(())
    };
    write(format!("{stem}.central.json"), &config.to_json())?;
    for m in &manifests {
        write(format!("{stem}.{}.manifest.json", m.component_label), &m.to_json())?;
    }
    for (label, ext, source) in &stubs {
        write(format!("{stem}.{label}.stub.{ext}"), source)?;
    }
    Ok(())
}

fn plugin_message(e: PluginError, registry: &PluginRegistry) -> String {
    let known: Vec<&str> = registry.technologies().collect();
    format!("{e} (known: {})", known.join(", "))
}

fn monitor(path: &Path, host: &str, port: u16, log: Option<PathBuf>, trace: Option<PathBuf>) -> Result<(), Failure> {
    let config = CentralConfig::from_json(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let open = |p: &Path| {
        fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(p)
            .map_err(|e| Failure::runtime(format!("{}: {e}", p.display())))
    };
    let mut options = MonitorOptions::default();
    options.verdict_sinks.push(Box::new(io::stdout()));
    if let Some(p) = &log {
        options.verdict_sinks.push(Box::new(open(p)?));
    }
    if let Some(p) = &trace {
        options.trace_sink = Some(Box::new(open(p)?));
    }
    let monitor = Monitor::bind(config, (host, port), options).map_err(|e| Failure::runtime(e.to_string()))?;
    println!("listening on {}", monitor.local_addr());
    let _ = io::stdout().flush();
    let stop = monitor.stop_handle();
    ctrlc::set_handler(move || stop.stop()).map_err(|e| Failure::runtime(e.to_string()))?;
    let report = monitor.run();
    println!("{}", report.summary());
    Ok(())
}
