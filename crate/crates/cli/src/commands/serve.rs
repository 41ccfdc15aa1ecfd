use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use fieldvoice_listen::{serve as run_server, ServerConfig};
use serde::Serialize;

use crate::Out;

#[derive(Args)]
pub struct ServeArgs {
    #[arg(long, env = "FIELDVOICE_BIND", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Holds the append-only event log; created if missing.
    #[arg(long, env = "FIELDVOICE_DATA_DIR")]
    pub data_dir: PathBuf,
    /// Root for campaign audio references, served under /audio.
    #[arg(long, env = "FIELDVOICE_AUDIO_DIR")]
    pub audio_dir: PathBuf,
}

#[derive(Serialize)]
struct Listening {
    listening: String,
}

pub fn serve(args: &ServeArgs, out: &mut Out) -> Result<()> {
    let config = ServerConfig {
        bind: args.bind,
        data_dir: args.data_dir.clone(),
        audio_dir: args.audio_dir.clone(),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting the async runtime")?;
    let records = out.records();
    runtime.block_on(run_server(
        config,
        async {
            let _ = tokio::signal::ctrl_c().await;
        },
        move |addr| {
            // scripts wait for this line before sending requests
            let line = if records {
                serde_json::to_string(&Listening {
                    listening: addr.to_string(),
                })
                .expect("plain struct")
            } else {
                format!("listening on {addr}")
            };
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{line}");
            let _ = stdout.flush();
        },
    ))?;
    Ok(())
}
