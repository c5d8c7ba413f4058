//! Streaming element readers. Each reader hands every element to a callback
//! as raw bytes and never buffers more than one record.

use std::io::{self, BufRead, Read};

use crate::args::InputFormat;

const READ_BUFFER: usize = 1 << 20;

/// Reads `source` in `format`, calling `sink` once per element. Blank lines
/// in the line-oriented formats are skipped.
pub fn for_each_element<R, F>(source: R, format: InputFormat, mut sink: F) -> io::Result<()>
where
    R: Read,
    F: FnMut(&[u8]),
{
    let mut reader = io::BufReader::with_capacity(READ_BUFFER, source);
    match format {
        InputFormat::Text => for_each_line(&mut reader, |line| {
            sink(line);
            Ok(())
        }),
        InputFormat::Ndjson => for_each_line(&mut reader, |line| {
            let value: serde_json::Value = serde_json::from_slice(line)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
            match value {
                serde_json::Value::String(s) => sink(s.as_bytes()),
                other => sink(&serde_json::to_vec(&other)?),
            }
            Ok(())
        }),
        InputFormat::BinaryU64 => for_each_record(&mut reader, sink),
    }
}

fn for_each_line<B, F>(reader: &mut B, mut on_line: F) -> io::Result<()>
where
    B: BufRead,
    F: FnMut(&[u8]) -> io::Result<()>,
{
    let mut line = Vec::with_capacity(256);
    loop {
        line.clear();
        if reader.read_until(b'\n', &mut line)? == 0 {
            return Ok(());
        }
        let mut token = line.as_slice();
        if let Some(rest) = token.strip_suffix(b"\n") {
            token = rest;
        }
        if let Some(rest) = token.strip_suffix(b"\r") {
            token = rest;
        }
        if !token.is_empty() {
            on_line(token)?;
        }
    }
}

fn for_each_record<B, F>(reader: &mut B, mut sink: F) -> io::Result<()>
where
    B: BufRead,
    F: FnMut(&[u8]),
{
    let mut carry = [0u8; 8];
    let mut carried = 0;
    loop {
        let buf = reader.fill_buf()?;
        if buf.is_empty() {
            break;
        }
        let len = buf.len();
        let mut rest = buf;
        if carried > 0 {
            let take = (8 - carried).min(rest.len());
            carry[carried..carried + take].copy_from_slice(&rest[..take]);
            carried += take;
            rest = &rest[take..];
            if carried == 8 {
                sink(&carry);
                carried = 0;
            }
        }
        let mut chunks = rest.chunks_exact(8);
        for record in &mut chunks {
            sink(record);
        }
        let tail = chunks.remainder();
        carry[carried..carried + tail.len()].copy_from_slice(tail);
        carried += tail.len();
        reader.consume(len);
    }
    if carried != 0 {
        return Err(io::Error::new(
            io::ErrorKind::UnexpectedEof,
            format!("trailing {carried} bytes do not form a 64-bit record"),
        ));
    }
    Ok(())
}
