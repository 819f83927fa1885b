use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod demo;
mod failure;
mod ops;
mod report;

use failure::Failure;

#[derive(Parser)]
#[command(
    name = "homenet",
    version,
    about = "Home sensor network routing, emulation and monitoring"
)]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    /// Sender and relays.
    Transmitters,
    /// Every node on the path, the receiver included.
    AllPathNodes,
}

impl From<Mode> for homenet::CountingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Transmitters => homenet::CountingMode::TransmittersOnly,
            Mode::AllPathNodes => homenet::CountingMode::AllPathNodes,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OpcodeArg {
    On,
    Off,
    Query,
}

impl From<OpcodeArg> for homenet::wire::Opcode {
    fn from(o: OpcodeArg) -> Self {
        match o {
            OpcodeArg::On => homenet::wire::Opcode::SwitchOn,
            OpcodeArg::Off => homenet::wire::Opcode::SwitchOff,
            OpcodeArg::Query => homenet::wire::Opcode::QuerySwitch,
        }
    }
}

#[derive(Args)]
struct TopologyArg {
    /// Topology JSON file (`matrix` or `positions`).
    #[arg(long)]
    topology: PathBuf,
}

#[derive(Args)]
struct AdminArg {
    /// Admin address of a running `serve`.
    #[arg(long, default_value = homenet_monitor::DEFAULT_ADMIN)]
    admin: SocketAddr,
}

#[derive(Subcommand)]
enum Action {
    /// Optimal route between two nodes under a communication radius.
    Route {
        #[command(flatten)]
        topology: TopologyArg,
        #[arg(long)]
        from: u32,
        #[arg(long)]
        to: u32,
        #[arg(long)]
        k: f64,
        /// Cross-check against exhaustive search; exit 1 on divergence.
        #[arg(long)]
        oracle: bool,
    },
    /// Rebuild the distance table by flooding from a root node.
    Discover {
        #[command(flatten)]
        topology: TopologyArg,
        /// Defaults to the topology's coordinator.
        #[arg(long)]
        root: Option<u32>,
    },
    /// Random traffic experiment; writes per-node visit counts as CSV.
    Simulate {
        #[command(flatten)]
        topology: TopologyArg,
        #[arg(long)]
        k: f64,
        /// Number of transmissions.
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "transmitters")]
        mode: Mode,
        #[arg(long, default_value = "visits.csv")]
        out: PathBuf,
    },
    /// Analytic all-pairs visit profile.
    Profile {
        #[command(flatten)]
        topology: TopologyArg,
        #[arg(long)]
        k: f64,
        #[arg(long, value_enum, default_value = "transmitters")]
        mode: Mode,
        /// Also write per-node counts as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Decode a Contact ID message, or complete a 15-digit body with its checksum.
    Cid {
        message: String,
        #[arg(long)]
        complete: bool,
    },
    /// Run the monitoring center until killed.
    Serve {
        #[arg(long, default_value = homenet_monitor::DEFAULT_LISTEN)]
        listen: SocketAddr,
        #[arg(long, default_value = homenet_monitor::DEFAULT_ADMIN)]
        admin: SocketAddr,
        #[arg(long, default_value = "records.log")]
        store: PathBuf,
        #[arg(long, default_value_t = 5000)]
        timeout_ms: u64,
    },
    /// Dispatch a relay command and wait for its outcome.
    SendCommand {
        #[command(flatten)]
        admin: AdminArg,
        #[arg(long)]
        target: u32,
        #[arg(long, value_enum)]
        opcode: OpcodeArg,
        #[arg(long, default_value_t = 5000)]
        wait_ms: u64,
    },
    /// Stored records as CSV, filtered and paged.
    Query {
        #[command(flatten)]
        admin: AdminArg,
        #[arg(long)]
        node: Option<u16>,
        /// reading, alarm or heartbeat.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        coordinator: Option<u32>,
        /// Inclusive lower bound, microseconds since the epoch.
        #[arg(long)]
        since: Option<u64>,
        /// Exclusive upper bound.
        #[arg(long)]
        until: Option<u64>,
        #[arg(long, default_value_t = homenet_monitor::DEFAULT_QUERY_LIMIT)]
        limit: usize,
        #[arg(long)]
        cursor: Option<u64>,
    },
    /// Latest record of every node as CSV.
    Snapshot {
        #[command(flatten)]
        admin: AdminArg,
    },
    /// Monitor, coordinator and ten emulated nodes wired together end to end.
    Demo(demo::DemoArgs),
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.action {
        Action::Route {
            topology,
            from,
            to,
            k,
            oracle,
        } => ops::route(&topology.topology, from, to, k, oracle),
        Action::Discover { topology, root } => ops::discover(&topology.topology, root),
        Action::Simulate {
            topology,
            k,
            n,
            seed,
            mode,
            out,
        } => ops::simulate(&topology.topology, k, n, seed, mode.into(), &out),
        Action::Profile {
            topology,
            k,
            mode,
            csv,
        } => ops::profile(&topology.topology, k, mode.into(), csv.as_deref()),
        Action::Cid { message, complete } => ops::cid(&message, complete),
        Action::Serve {
            listen,
            admin,
            store,
            timeout_ms,
        } => ops::serve(listen, admin, store, Duration::from_millis(timeout_ms)),
        Action::SendCommand {
            admin,
            target,
            opcode,
            wait_ms,
        } => ops::send_command(admin.admin, target, opcode.into(), wait_ms),
        Action::Query {
            admin,
            node,
            kind,
            coordinator,
            since,
            until,
            limit,
            cursor,
        } => ops::query(
            admin.admin,
            ops::QueryArgs {
                node,
                kind,
                coordinator,
                since,
                until,
                limit,
                cursor,
            },
        ),
        Action::Snapshot { admin } => ops::snapshot(admin.admin),
        Action::Demo(args) => demo::run(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
