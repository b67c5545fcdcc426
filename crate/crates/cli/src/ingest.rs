//! Loading frame datasets produced elsewhere.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use icae_core::dataset::FrameDataset;

use crate::config::InputFormat;

/// Reads an `ICAE` binary file or a CSV export and checks its dimensions.
pub fn ingest_external(path: &Path, d_x: Option<usize>, d_c: Option<usize>, format: InputFormat) -> Result<FrameDataset> {
    let ds = match format {
        InputFormat::Binary => {
            let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            FrameDataset::from_bytes(&bytes).with_context(|| format!("ingesting {}", path.display()))?
        }
        InputFormat::Csv => {
            let (Some(dx), Some(dc)) = (d_x, d_c) else {
                bail!("csv input needs both d_x and d_c");
            };
            let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
            FrameDataset::read_csv(BufReader::new(file), dx, dc)
                .with_context(|| format!("ingesting {}", path.display()))?
        }
    };
    if let Some(dx) = d_x {
        if ds.d_x != dx {
            bail!("{}: d_x is {}, expected {dx}", path.display(), ds.d_x);
        }
    }
    if let Some(dc) = d_c {
        if ds.d_c != dc {
            bail!("{}: d_c is {}, expected {dc}", path.display(), ds.d_c);
        }
    }
    Ok(ds)
}
