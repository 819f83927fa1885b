//! Subcommand bodies other than `demo`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use homenet::routing::{
    all_pairs_profile, brute_force_route, find_optimal_path, BRUTE_FORCE_LIMIT,
};
use homenet::simnet::run_discovery;
use homenet::wire::{cid_checksum, decode_cid, Opcode};
use homenet::{CountingMode, NodeId, Route, RouteQuery, Topology};
use homenet_monitor::{
    serve as start_server, AdminClient, AdminRequest, AdminResponse, HistoryFilter, RecordKind,
    RecordView, ServerConfig,
};

use crate::failure::Failure;
use crate::report::run_experiment;

pub fn load(path: &Path) -> Result<Topology, Failure> {
    Topology::load(path)
        .map_err(|e| Failure::from(e).context(format!("loading {}", path.display())))
}

fn path_ids(route: &Route) -> String {
    route
        .ids()
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub fn route(path: &Path, from: u32, to: u32, k: f64, oracle: bool) -> Result<(), Failure> {
    let topology = load(path)?;
    let query = RouteQuery::new(from, to, k);
    let found = find_optimal_path(topology.table(), &query);
    if oracle {
        if topology.len() > BRUTE_FORCE_LIMIT {
            return Err(Failure::usage(format!(
                "--oracle needs at most {BRUTE_FORCE_LIMIT} nodes"
            )));
        }
        let reference = brute_force_route(topology.table(), &query);
        if found != reference {
            return Err(Failure::domain(format!(
                "routing diverges from exhaustive search: {found:?} vs {reference:?}"
            )));
        }
        eprintln!("oracle agrees");
    }
    let route = found?;
    println!("path {}", path_ids(&route));
    println!("dist {}", route.dist);
    println!("hops {}", route.hops);
    Ok(())
}

pub fn discover(path: &Path, root: Option<u32>) -> Result<(), Failure> {
    let topology = load(path)?;
    let root = root.map(NodeId).unwrap_or(topology.coordinator());
    let found = run_discovery(&topology, root)?;
    let exact = found.table == *topology.table();

    let mut w = csv::Writer::from_writer(io::stdout().lock());
    let mut header = vec!["node_id".to_string()];
    header.extend(found.table.nodes().map(|n| n.to_string()));
    w.write_record(&header)?;
    for (i, row) in found.table.rows().iter().enumerate() {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    eprintln!(
        "nodes {} messages {} root {} matches ground truth: {}",
        found.table.len(),
        found.message_count,
        root,
        exact
    );
    if exact {
        Ok(())
    } else {
        Err(Failure::domain(
            "discovered table differs from the topology",
        ))
    }
}

pub fn simulate(
    path: &Path,
    k: f64,
    n: u64,
    seed: u64,
    mode: CountingMode,
    out: &Path,
) -> Result<(), Failure> {
    let topology = load(path)?;
    let report = run_experiment(&topology, k, n, seed, mode)?;
    let file = File::create(out)
        .map_err(|e| Failure::io(e).context(format!("creating {}", out.display())))?;
    report.write_csv(BufWriter::new(file))?;
    println!("{report}");
    eprintln!(
        "runtime {:.3}s, wrote {}",
        report.runtime.as_secs_f64(),
        out.display()
    );
    Ok(())
}

pub fn profile(
    path: &Path,
    k: f64,
    mode: CountingMode,
    csv_out: Option<&Path>,
) -> Result<(), Failure> {
    let topology = load(path)?;
    let stats = all_pairs_profile(topology.table(), k, mode)?;
    let ids = |v: Vec<NodeId>| {
        v.iter()
            .map(NodeId::to_string)
            .collect::<Vec<_>>()
            .join(",")
    };
    println!("mode        {}", mode.as_str());
    println!("pairs       {}", stats.transmissions());
    println!("unreachable {}", stats.unreachable());
    println!("top3        {}", ids(stats.top_nodes(3)));
    println!("relay_top3  {}", ids(stats.top_relays(3)));
    if let Some(out) = csv_out {
        let file = File::create(out)
            .map_err(|e| Failure::io(e).context(format!("creating {}", out.display())))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(["node_id", "count", "relay_count"])?;
        for (i, (c, r)) in stats.counts().iter().zip(stats.relay_counts()).enumerate() {
            w.write_record([(i + 1).to_string(), c.to_string(), r.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn cid(message: &str, complete: bool) -> Result<(), Failure> {
    let message = if complete {
        let digit = cid_checksum(message).map_err(Failure::usage)?;
        let full = format!("{message}{digit}");
        println!("message     {full}");
        full
    } else {
        message.to_string()
    };
    let event = decode_cid(&message).map_err(Failure::domain)?;
    println!("account     {}", event.account);
    println!("type        {}", event.message_type);
    println!("qualifier   {}", event.qualifier.name());
    println!("event       {:03}", event.event_code);
    println!("partition   {:02}", event.partition);
    println!("zone        {:03}", event.zone);
    Ok(())
}

pub fn serve(
    listen: SocketAddr,
    admin: SocketAddr,
    store: PathBuf,
    timeout: Duration,
) -> Result<(), Failure> {
    let mut config = ServerConfig::new(store);
    config.listen = listen;
    config.admin = Some(admin);
    config.command_timeout = timeout;
    let server = start_server(config)?;
    eprintln!(
        "listening on {} (admin {}), {} records recovered",
        server.uplink_addr(),
        server.admin_addr().expect("admin listener configured"),
        server.service().record_count()
    );
    loop {
        thread::park();
    }
}

fn admin(addr: SocketAddr) -> Result<AdminClient, Failure> {
    let client = AdminClient::connect(addr)
        .map_err(|e| Failure::from(e).context(format!("connecting to {addr}")))?;
    client.set_timeout(Some(Duration::from_secs(30)))?;
    Ok(client)
}

fn answer(client: &mut AdminClient, request: &AdminRequest) -> Result<AdminResponse, Failure> {
    let r = client.request(request)?;
    if r.ok {
        Ok(r)
    } else {
        Err(Failure::domain(
            r.error.unwrap_or_else(|| "request failed".into()),
        ))
    }
}

pub fn send_command(
    addr: SocketAddr,
    target: u32,
    opcode: Opcode,
    wait_ms: u64,
) -> Result<(), Failure> {
    let mut client = admin(addr)?;
    let r = answer(
        &mut client,
        &AdminRequest::SendCommand {
            target,
            opcode: opcode.name().into(),
            wait_ms: Some(wait_ms),
        },
    )?;
    let t = r.ticket.expect("send_command answers with a ticket");
    println!(
        "ticket {} target {} opcode {} seq {} coordinator {} state {}",
        t.ticket_id, t.target_node, t.opcode, t.seq, t.coordinator_id, t.state
    );
    match t.state.as_str() {
        "acked" => Ok(()),
        other => Err(Failure::domain(format!("command ended {other}"))),
    }
}

pub struct QueryArgs {
    pub node: Option<u16>,
    pub kind: Option<String>,
    pub coordinator: Option<u32>,
    pub since: Option<u64>,
    pub until: Option<u64>,
    pub limit: usize,
    pub cursor: Option<u64>,
}

fn write_records(records: &[RecordView]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record([
        "ordinal",
        "received_at",
        "coordinator_id",
        "src_node",
        "seq",
        "kind",
        "payload_hex",
        "cid_event",
        "cid_zone",
        "parse_error",
    ])?;
    for r in records {
        let kind = serde_kind(r);
        w.write_record([
            r.ordinal.to_string(),
            r.received_at.to_string(),
            r.coordinator_id.to_string(),
            r.src_node.to_string(),
            r.seq.to_string(),
            kind.to_string(),
            r.payload_hex.clone(),
            r.cid
                .as_ref()
                .map(|c| format!("{:03}", c.event_code))
                .unwrap_or_default(),
            r.cid
                .as_ref()
                .map(|c| format!("{:03}", c.zone))
                .unwrap_or_default(),
            r.parse_error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn serde_kind(r: &RecordView) -> &'static str {
    match r.kind {
        RecordKind::Reading => "reading",
        RecordKind::Alarm => "alarm",
        RecordKind::Heartbeat => "heartbeat",
    }
}

pub fn query(addr: SocketAddr, args: QueryArgs) -> Result<(), Failure> {
    let kind = args
        .kind
        .as_deref()
        .map(RecordKind::parse)
        .transpose()
        .map_err(Failure::usage)?;
    let filter = HistoryFilter {
        node: args.node,
        kind,
        coordinator: args.coordinator,
        since: args.since,
        until: args.until,
    };
    let mut client = admin(addr)?;
    let r = answer(
        &mut client,
        &AdminRequest::Query {
            filter,
            limit: args.limit,
            cursor: args.cursor,
        },
    )?;
    write_records(r.records.as_deref().unwrap_or_default())?;
    if let Some(c) = r.next_cursor {
        eprintln!("more records: --cursor {c}");
    }
    io::stdout().flush()?;
    Ok(())
}

pub fn snapshot(addr: SocketAddr) -> Result<(), Failure> {
    let mut client = admin(addr)?;
    let r = answer(&mut client, &AdminRequest::Snapshot)?;
    write_records(r.records.as_deref().unwrap_or_default())
}
