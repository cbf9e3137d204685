use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use hybridq::bench::{run_bench, BenchOptions};
use hybridq::dataset::{read_dataset, write_dataset, PayloadMix, QueryMix, WorkloadSpec};
use hybridq::persist::{self, write_gas_csv, IndexVariant, StateMeta};
use hybridq::store::{ContentStore, DirStore};
use hybridq::{EngineError, MutationKind, Outcome, ResultSet};
use hybridq_core::gas::GasReport;
use hybridq_core::sql::{parse, QueryAst, SqlError};
use serde_json::json;

#[derive(Parser)]
#[command(name = "hybridq", version, about = "Verifiable SQL queries over a hybrid on/off-chain store")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Jsonl,
    Csv,
}

#[derive(clap::Args)]
struct IndexArgs {
    #[arg(long, value_enum, default_value = "bhash")]
    index_variant: IndexVariant,
    #[arg(long, default_value_t = 10)]
    threshold_t: usize,
}

impl IndexArgs {
    fn meta(&self) -> StateMeta {
        StateMeta { index_variant: self.index_variant, threshold_t: self.threshold_t }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset.
    Generate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of blocks (power of two, at most 16384).
        #[arg(long, default_value_t = 1024)]
        blocks: usize,
        #[arg(long, default_value_t = 4)]
        entries_per_block: usize,
        /// Block arrival rate in blocks per second.
        #[arg(long, default_value_t = 1.0 / 12.0)]
        density: f64,
        #[arg(long, default_value_t = 0.3)]
        image_fraction: f64,
        #[arg(long, default_value_t = 0.02)]
        video_fraction: f64,
        /// Selects per primitive generated at each bench scale.
        #[arg(long, default_value_t = 20)]
        queries: usize,
    },
    /// Load a dataset into an engine state directory, one block per dataset block.
    Ingest {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// Only ingest the first N blocks.
        #[arg(long)]
        blocks: Option<usize>,
        #[command(flatten)]
        index: IndexArgs,
    },
    /// Run one SQL statement against an engine state directory.
    Query {
        #[arg(long)]
        state: PathBuf,
        sql: String,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Attach the verification object as hex.
        #[arg(long)]
        emit_vo: bool,
        /// Print the execution plan before running.
        #[arg(long)]
        explain: bool,
        #[command(flatten)]
        index: IndexArgs,
    },
    /// Replay the block log, check every anchored root and every payload.
    Verify {
        #[arg(long)]
        state: PathBuf,
    },
    /// Run the benchmark over dataset prefixes.
    Bench {
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated block counts.
        #[arg(long, value_delimiter = ',', default_value = "16,256,1024")]
        scales: Vec<usize>,
        #[command(flatten)]
        index: IndexArgs,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Generate the dataset first with this seed if it does not exist.
        #[arg(long)]
        seed: Option<u64>,
    },
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            // Malformed SQL is bad input, like a malformed flag.
            if e.downcast_ref::<SqlError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Generate { dataset, seed, blocks, entries_per_block, density, image_fraction, video_fraction, queries } => {
            let spec = WorkloadSpec {
                n_blocks: blocks,
                entries_per_block,
                timestamp_density: density,
                payload_mix: PayloadMix { image: image_fraction, video: video_fraction },
                query_mix: QueryMix { simple: queries, time_range: queries, fuzzy: queries },
                seed,
            };
            spec.validate()?;
            let ds = write_dataset(&dataset, &spec)?;
            println!("generated {} entries in {} blocks at {}", ds.records.len(), blocks, dataset.display());
        }
        Command::Ingest { dataset, state, blocks, index } => {
            let ds = read_dataset(&dataset)?;
            let source = DirStore::open(&dataset)?;
            let (engine, meta) = persist::open_or_create(&state, index.meta())?;
            let n = blocks.unwrap_or(ds.spec.n_blocks);
            let meter = engine.meter();
            let before = meter.counters();
            let mut count = 0;
            for batch in ds.blocks(n)? {
                for e in &batch {
                    for cid in e.image_cid.iter().chain(&e.video_cid) {
                        if !engine.store().contains(cid) {
                            engine.store().put(&source.get(cid)?)?;
                        }
                    }
                }
                count += batch.len();
                engine.insert_batch(batch)?;
            }
            let report = meter.report_since("ingest", &before);
            persist::save(&engine, &state, &meta)?;
            append_gas(&state, &report)?;
            println!("ingested {count} entries; head {} at height {}", engine.head_digest(), engine.head_height());
        }
        Command::Query { state, sql, format, emit_vo, explain, index } => {
            let ast = parse(&sql)?;
            let (engine, meta) = persist::open_or_create(&state, index.meta())?;
            if explain {
                println!("plan: {}", engine.explain(&ast));
            }
            let meter = engine.meter();
            let before = meter.counters();
            match engine.execute(&ast)? {
                Outcome::Rows { result, .. } => print_rows(&result, format, emit_vo)?,
                Outcome::Mutation(m) => {
                    let op = match m.kind {
                        MutationKind::Insert => "insert",
                        MutationKind::Update => "update",
                        MutationKind::Delete => "delete",
                    };
                    persist::save(&engine, &state, &meta)?;
                    append_gas(&state, &meter.report_since(op, &before))?;
                    let ids: Vec<String> = match &ast {
                        QueryAst::Delete { entry_id } => vec![entry_id.to_string()],
                        _ => m.entry_ids.iter().map(u64::to_string).collect(),
                    };
                    println!("{op} ok: entries [{}] at height {} (epoch {})", ids.join(","), m.height, m.epoch.0);
                }
            }
        }
        Command::Verify { state } => {
            let (engine, _) = persist::open(&state)?;
            engine.with_state(|st| st.ledger.verify_chain())?;
            let mut payloads = 0;
            for b in engine.blocks() {
                for e in &b.entries {
                    for cid in e.image_cid.iter().chain(&e.video_cid) {
                        engine.store().get(cid).map_err(EngineError::from)?;
                        payloads += 1;
                    }
                }
            }
            println!(
                "ok: {} blocks, {} payloads verified; head {}",
                engine.head_height() + 1,
                payloads,
                engine.head_digest()
            );
        }
        Command::Bench { dataset, scales, index, reps, format, seed } => {
            if let Some(seed) = seed {
                if !dataset.join(hybridq::dataset::ENTRIES_FILE).exists() {
                    let n = scales.iter().copied().max().unwrap_or(1).next_power_of_two();
                    write_dataset(&dataset, &WorkloadSpec { n_blocks: n, seed, ..Default::default() })?;
                }
            }
            let ds = read_dataset(&dataset)?;
            let store: Arc<dyn ContentStore> = Arc::new(DirStore::open(&dataset)?);
            let opts = BenchOptions { variant: index.index_variant, threshold_t: index.threshold_t, reps };
            let report = run_bench(&ds, store, &scales, &opts)?;
            let out = io::stdout().lock();
            match format {
                Format::Table => print!("{}", report.to_table()),
                Format::Jsonl => report.write_jsonl(out)?,
                Format::Csv => report.write_csv(out)?,
            }
        }
    }
    Ok(())
}

fn append_gas(state: &Path, report: &GasReport) -> io::Result<()> {
    let path = state.join("gas.csv");
    let fresh = !path.exists();
    let mut buf = Vec::new();
    write_gas_csv(std::slice::from_ref(report), &mut buf).map_err(io::Error::other)?;
    let body = if fresh { &buf[..] } else { &buf[buf.iter().position(|&b| b == b'\n').map_or(0, |i| i + 1)..] };
    std::fs::OpenOptions::new().create(true).append(true).open(path)?.write_all(body)
}

fn opt_hex<T: ToString>(v: Option<T>) -> String {
    v.map(|c| c.to_string()).unwrap_or_default()
}

fn print_rows(rs: &ResultSet, format: Format, emit_vo: bool) -> CliResult {
    let vo = if emit_vo { rs.vo.as_ref().map(|v| hex::encode(v.to_canonical_bytes())) } else { None };
    let mut out = io::stdout().lock();
    match format {
        Format::Table => {
            writeln!(out, "{:>8} {:>20} {:>11} {:<44} {:>6} {:>6}", "entry_id", "amount", "timestamp", "addresses", "image", "video")?;
            for r in &rs.rows {
                let e = &r.entry;
                let addrs: Vec<String> = e.addresses.iter().map(|a| a.to_string()).collect();
                let len = |b: &Option<Vec<u8>>| b.as_ref().map_or("-".to_string(), |b| b.len().to_string());
                writeln!(
                    out,
                    "{:>8} {:>20} {:>11} {:<44} {:>6} {:>6}",
                    e.entry_id,
                    e.amount,
                    e.timestamp,
                    addrs.join(","),
                    len(&r.image),
                    len(&r.video)
                )?;
            }
            writeln!(out, "({} rows, verified at height {})", rs.rows.len(), rs.anchor_height)?;
            if let Some(vo) = vo {
                writeln!(out, "vo: {vo}")?;
            }
        }
        Format::Jsonl => {
            for r in &rs.rows {
                let e = &r.entry;
                let line = json!({
                    "entry_id": e.entry_id,
                    "amount": e.amount,
                    "addresses": e.addresses.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
                    "timestamp": e.timestamp,
                    "imagecid": e.image_cid.map(|c| c.to_string()),
                    "videocid": e.video_cid.map(|c| c.to_string()),
                    "image_bytes": r.image.as_ref().map(Vec::len),
                    "video_bytes": r.video.as_ref().map(Vec::len),
                });
                writeln!(out, "{line}")?;
            }
            if emit_vo {
                writeln!(out, "{}", json!({ "anchor_height": rs.anchor_height, "vo": vo }))?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut header = vec!["entry_id", "amount", "addresses", "timestamp", "imagecid", "videocid"];
            if emit_vo {
                header.push("vo");
            }
            w.write_record(&header)?;
            for r in &rs.rows {
                let e = &r.entry;
                let addrs: Vec<String> = e.addresses.iter().map(|a| a.to_string()).collect();
                let mut rec = vec![
                    e.entry_id.to_string(),
                    e.amount.to_string(),
                    addrs.join(" "),
                    e.timestamp.to_string(),
                    opt_hex(e.image_cid),
                    opt_hex(e.video_cid),
                ];
                if emit_vo {
                    rec.push(vo.clone().unwrap_or_default());
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
