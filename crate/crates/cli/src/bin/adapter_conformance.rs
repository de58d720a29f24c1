//! Runs the protocol conformance suite against any adapter command.

use anyhow::Result;
use clap::Parser;
use longform_core::adapter::{run_conformance, AdapterOp};

#[derive(Parser)]
#[command(name = "adapter-conformance", about = "Check an adapter against the line protocol")]
struct Args {
    /// Ops the adapter implements (default: all).
    #[arg(long, value_delimiter = ',')]
    ops: Vec<AdapterOp>,
    /// Adapter program and its arguments.
    #[arg(required = true, trailing_var_arg = true, allow_hyphen_values = true)]
    command: Vec<String>,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let ops = if args.ops.is_empty() {
        AdapterOp::ALL.to_vec()
    } else {
        args.ops
    };
    let report = run_conformance(&args.command, &ops);
    print!("{report}");
    if !report.passed() {
        std::process::exit(1);
    }
    println!("all checks passed");
    Ok(())
}
