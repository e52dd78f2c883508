//! Load the bundled Sioux Falls TNTP files and look at the network and one
//! shortest path. Set TOLLSIM_DATA_DIR to point at other files.

use tollsim::network::{load_tntp_with, shortest_path, TntpOptions};
use tollsim::scenarios::{ScenarioConfig, ScenarioKind};

pub fn run_example() -> tollsim::Result<()> {
    let cfg = ScenarioConfig::new(ScenarioKind::SiouxFalls, 1);
    let dir = cfg.resolve_data_dir();
    let read = |name: &str| std::fs::read_to_string(dir.join(name)).map_err(|e| tollsim::Error::io(dir.join(name), e));
    // Free-flow times are in minutes; latencies are kept in hours.
    let opts = TntpOptions { free_flow_time_scale: 1.0 / 60.0 };
    let (net, demand) = load_tntp_with(&read(&cfg.net_file)?, &read(&cfg.trips_file)?, &opts)?;

    let trips: f64 = demand.values().sum();
    println!("{} nodes, {} edges, {} O-D pairs, {trips:.0} trips", net.node_count(), net.edge_count(), demand.len());
    println!("largest capacity {:.0} veh", net.max_capacity());

    // Node ids are 0-based internally; TNTP node 1 is id 0.
    let (path, hours) = shortest_path(&net, 0, 19, &net.latencies())?.expect("1 -> 20 is reachable");
    let nodes: Vec<usize> = std::iter::once(path.origin()).chain(path.edges().iter().map(|&e| net.edge(e).head)).collect();
    println!("fastest 1 -> 20: {:.1} min via {:?}", hours * 60.0, nodes.iter().map(|n| n + 1).collect::<Vec<_>>());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(2);
    }
}
