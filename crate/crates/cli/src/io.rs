use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::Context;
use vrtraffic::trace::{parse_trace, PacketTrace, TraceFormat};

use crate::args::TraceFormatArg;
use crate::error::{Classify, Result};

pub fn trace_format(path: &Path, arg: Option<TraceFormatArg>) -> TraceFormat {
    match arg {
        Some(TraceFormatArg::Csv) => TraceFormat::Csv,
        Some(TraceFormatArg::Jsonl) => TraceFormat::Jsonl,
        None => TraceFormat::from_path(path),
    }
}

pub fn read_input(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display())).input()
}

pub fn read_trace(path: &Path, format: Option<TraceFormatArg>) -> Result<PacketTrace> {
    let bytes = read_input(path)?;
    let trace = parse_trace(&bytes, trace_format(path, format))
        .with_context(|| format!("parsing {}", path.display()))
        .input()?;
    log::info!("{}: {} packets", path.display(), trace.len());
    Ok(trace)
}

/// Writes `bytes` to `path` via a temporary file in the same directory, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))
        .internal()?;
    tmp.write_all(bytes).and_then(|_| tmp.flush()).context("writing output").internal()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display())).internal()?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Output to a file when given, else stdout.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(bytes).and_then(|_| out.flush()) {
                // reader went away (`| head`)
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.context("writing to stdout").internal(),
            }
        }
    }
}

/// File name stem used for per-input outputs.
pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".to_string())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).input()
}

/// Checks every input exists before any work starts.
pub fn check_inputs(inputs: &[PathBuf]) -> Result<()> {
    for p in inputs {
        if !p.is_file() {
            return Err(crate::error::input_error(format!("{}: no such file", p.display())));
        }
    }
    Ok(())
}

/// Applies `f` to every item on up to `jobs` threads; results keep input
/// order.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: Option<usize>, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("result slot") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("result slot").expect("every item processed")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order() {
        let xs: Vec<u64> = (0..100).collect();
        assert_eq!(par_map(&xs, Some(4), |x| x * 2), xs.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert_eq!(par_map(&xs, Some(1), |x| x + 1)[99], 100);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
