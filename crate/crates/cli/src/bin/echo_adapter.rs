//! Model-free adapter speaking the line protocol on stdin/stdout.
//!
//! `echo-adapter [script.json]` — with a recognizer script, `recognize`
//! answers from it; otherwise every chunk gets the same fixed tokens.

use std::io::{stdin, stdout};

use anyhow::{Context, Result};
use longform_core::adapter::{serve, MockHandler};
use longform_core::recognition::ScriptedRecognizer;

fn main() -> Result<()> {
    let handler = match std::env::args().nth(1) {
        Some(path) => MockHandler::new(Box::new(
            ScriptedRecognizer::from_file(&path).with_context(|| format!("script {path}"))?,
        )),
        None => MockHandler::default(),
    };
    serve(stdin().lock(), stdout().lock(), &handler)?;
    Ok(())
}
