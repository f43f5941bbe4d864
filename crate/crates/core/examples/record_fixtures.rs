//! Regenerates the bundled fixture pack and evaluation dataset by recording
//! the offline responder.
//!
//! cargo run -p simulrag --example record_fixtures

use std::path::Path;
use std::sync::Arc;

use simulrag::benchgen::{derive_templates, generate_dataset, write_dataset, FillOptions};
use simulrag::domain::{Domain, PipelineConfig, SelectionConfig, SelectionStrategy};
use simulrag::evaluation::{run_comparison, ComparisonSpec};
use simulrag::gateway::{Gateway, RecordingBackend};
use simulrag::offline::OfflineBackend;
use simulrag::pipeline;
use simulrag::simulators::handbook_for;

pub const EVAL_SEEDS: [(Domain, u64); 2] = [(Domain::Climate, 11), (Domain::Epidemiology, 12)];
pub const BENCH_SEEDS: [(Domain, u64); 2] = [(Domain::Climate, 21), (Domain::Epidemiology, 22)];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/fixtures");
    let recorder = Arc::new(RecordingBackend::new(Arc::new(OfflineBackend::default())));
    let gw = Gateway::new(recorder.clone(), "scripted").with_concurrency(4);
    let opts = FillOptions::default();

    let mut dataset = Vec::new();
    for (domain, seed) in EVAL_SEEDS {
        dataset.extend(generate_dataset(&gw, domain, 3, seed, None, &opts)?.items);
    }
    write_dataset(&dataset, &out.join("eval_dataset.jsonl"))?;
    for (domain, seed) in BENCH_SEEDS {
        generate_dataset(&gw, domain, 10, seed, None, &opts)?;
    }
    for domain in Domain::ALL {
        derive_templates(&gw, handbook_for(domain))?;
    }

    let spec = ComparisonSpec {
        budgets: vec![0.0, 0.15, 0.25, 0.45, 1.0],
        ..ComparisonSpec::default()
    };
    let (report, _) = run_comparison(&gw, &dataset, &spec, &Default::default());
    for cell in &report.cells {
        if !cell.failures.is_empty() {
            eprintln!("{} {}: {:?}", cell.method, cell.budget, cell.failures);
        }
    }
    let threshold = PipelineConfig {
        selection: SelectionConfig::threshold(SelectionStrategy::UeSba, 0.5),
        ..PipelineConfig::default()
    };
    for item in &dataset {
        pipeline::run(&gw, &item.question, &threshold)?;
        pipeline::run(&gw, &item.question, &PipelineConfig::default())?;
    }

    std::fs::write(out.join("pack.jsonl"), recorder.to_jsonl())?;
    println!("{} fixtures, {} questions", recorder.fixtures().len(), dataset.len());
    Ok(())
}
