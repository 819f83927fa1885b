//! End-to-end run: monitor, bridge, coordinator and emulated nodes in one
//! process.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::Args;
use homenet::netmodel::table_one;
use homenet::routing::find_optimal_path;
use homenet::simnet::{Emulator, EmulatorConfig};
use homenet::wire::{Opcode, SwitchState};
use homenet::{NodeId, RouteQuery, Topology};
use homenet_monitor::{serve, Bridge, HistoryFilter, RecordKind, ServerConfig, TicketState};

use crate::failure::Failure;
use crate::ops::load;

#[derive(Args)]
pub struct DemoArgs {
    /// Communication radius.
    #[arg(long, default_value_t = 5.0)]
    k: f64,
    /// Topology JSON; the reference 10-node table by default.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Uplink listen address; port 0 picks a free port.
    #[arg(long, default_value = "127.0.0.1:0")]
    listen: SocketAddr,
    #[arg(long, default_value = "127.0.0.1:0")]
    admin: SocketAddr,
    /// Record log; a temporary file by default.
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ticks of sensor traffic before the command is sent.
    #[arg(long, default_value_t = 120)]
    ticks: u64,
    #[arg(long, default_value_t = 10)]
    target: u32,
    /// Node whose alarm panel raises the Contact ID message.
    #[arg(long, default_value_t = 1)]
    alarm_node: u32,
    #[arg(long, default_value = "1234181131010158")]
    alarm: String,
}

const STAGE_BUDGET: Duration = Duration::from_secs(3);

fn stage(name: &str, ok: bool, detail: impl std::fmt::Display) {
    println!("{:<9} {} {detail}", name, if ok { "ok" } else { "FAILED" });
}

pub fn run(args: DemoArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let topology = match &args.topology {
        Some(p) => load(p)?,
        None => Topology::from_table(table_one()),
    };
    let tmp = tempfile::tempdir()?;
    let store = args
        .store
        .clone()
        .unwrap_or_else(|| tmp.path().join("records.log"));

    let mut config = ServerConfig::new(&store);
    config.listen = args.listen;
    config.admin = Some(args.admin);
    config.command_timeout = STAGE_BUDGET;
    let server = serve(config).map_err(|e| Failure::from(e).context("starting the monitor"))?;
    stage("monitor", true, format!("uplink {}", server.uplink_addr()));

    let emulator = Emulator::new(
        topology.clone(),
        EmulatorConfig {
            radius: args.k,
            seed: args.seed,
            sample_period: 20,
        },
    )?;
    let mut bridge = Bridge::connect(emulator, server.uplink_addr())?;
    let discovery = bridge.emulator_mut().discover()?;
    let exact = discovery.table == *topology.table();
    stage(
        "discover",
        exact,
        format!(
            "{} nodes, {} messages",
            discovery.table.len(),
            discovery.message_count
        ),
    );

    bridge.pump(args.ticks)?;
    let service = server.service().clone();
    let settle = Instant::now() + STAGE_BUDGET;
    while service.record_count() == 0 && Instant::now() < settle {
        bridge.exchange(Duration::from_millis(10))?;
    }
    let readings = service
        .query_history(
            &HistoryFilter {
                kind: Some(RecordKind::Reading),
                ..Default::default()
            },
            usize::MAX,
            None,
        )?
        .records
        .len();
    stage("readings", readings > 0, format!("{readings} stored"));

    let target = NodeId(args.target);
    let coordinator = topology.coordinator();
    let route = find_optimal_path(
        topology.table(),
        &RouteQuery::new(coordinator, target, args.k),
    )
    .map(|r| {
        r.ids()
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(",")
    })
    .unwrap_or_else(|e| e.to_string());
    let ticket = service.dispatch_command(args.target, Opcode::SwitchOn)?;
    let deadline = Instant::now() + STAGE_BUDGET;
    let mut state = ticket.state;
    while !state.is_terminal() && Instant::now() < deadline {
        bridge.exchange(Duration::from_millis(2))?;
        bridge.pump(1)?;
        state = service.ticket(ticket.ticket_id)?.state;
    }
    let switched = bridge
        .emulator()
        .node(target)
        .is_some_and(|n| n.relay_switch == SwitchState::On);
    let acked = state == TicketState::Acked && switched;
    stage(
        "command",
        acked,
        format!("switch-on to node {target} via {route}: {}", state.name()),
    );

    bridge
        .emulator_mut()
        .inject_alarm(NodeId(args.alarm_node), &args.alarm)?;
    let alarm_filter = HistoryFilter {
        kind: Some(RecordKind::Alarm),
        ..Default::default()
    };
    let deadline = Instant::now() + STAGE_BUDGET;
    let mut alarm = None;
    while alarm.is_none() && Instant::now() < deadline {
        bridge.pump(1)?;
        bridge.exchange(Duration::from_millis(2))?;
        alarm = service
            .query_history(&alarm_filter, 1, None)?
            .records
            .into_iter()
            .next();
    }
    let parsed = alarm.as_ref().and_then(|r| r.cid.clone());
    stage(
        "alarm",
        parsed.is_some(),
        match (&alarm, &parsed) {
            (_, Some(c)) => format!(
                "event {:03} zone {:03} from node {}",
                c.event_code, c.zone, args.alarm_node
            ),
            (Some(r), None) => format!(
                "stored unparsed: {}",
                r.parse_error.clone().unwrap_or_default()
            ),
            (None, None) => "not received".to_string(),
        },
    );

    drop(bridge);
    server.shutdown()?;
    println!("elapsed   {:.3}s", started.elapsed().as_secs_f64());
    if !exact {
        return Err(Failure::domain("discovery did not reproduce the table"));
    }
    if !acked {
        return Err(Failure::domain(format!(
            "command to node {target} ended {}",
            state.name()
        )));
    }
    if parsed.is_none() {
        return Err(Failure::domain("alarm record missing or unparsed"));
    }
    Ok(())
}
