use std::io::{self, Write};

use serde::Serialize;
use serde_json::Value;

use crate::args::Format;

/// Writes records as JSON lines or CSV. CSV columns come from the first
/// record; nested values are embedded as compact JSON.
pub struct RecordWriter<'a> {
    format: Format,
    out: &'a mut dyn Write,
    columns: Option<Vec<String>>,
}

impl<'a> RecordWriter<'a> {
    pub fn new(format: Format, out: &'a mut dyn Write) -> Self {
        RecordWriter { format, out, columns: None }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> io::Result<()> {
        let value = serde_json::to_value(record).map_err(io::Error::other)?;
        match self.format {
            Format::Json => {
                serde_json::to_writer(&mut *self.out, &value).map_err(io::Error::other)?;
                self.out.write_all(b"\n")
            }
            Format::Csv => self.write_csv(value),
        }
    }

    fn write_csv(&mut self, value: Value) -> io::Result<()> {
        let Value::Object(map) = value else {
            return self.write_row(&[cell(&value)]);
        };
        if self.columns.is_none() {
            let header: Vec<String> = map.keys().cloned().collect();
            self.write_row(&header)?;
            self.columns = Some(header);
        }
        let columns = self.columns.as_ref().expect("set above");
        let row: Vec<String> = columns.iter().map(|k| map.get(k).map(cell).unwrap_or_default()).collect();
        self.write_row(&row)
    }

    fn write_row(&mut self, row: &[String]) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(row).map_err(io::Error::other)?;
        let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        self.out.write_all(&bytes)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        x: String,
        ok: bool,
        tags: Vec<u8>,
    }

    #[test]
    fn json_and_csv() {
        let rows =
            [Row { x: "-98".into(), ok: true, tags: vec![1, 2] }, Row { x: "6".into(), ok: false, tags: vec![] }];
        let mut buf = Vec::new();
        let mut w = RecordWriter::new(Format::Json, &mut buf);
        rows.iter().for_each(|r| w.write(r).unwrap());
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"ok\":true,\"tags\":[1,2],\"x\":\"-98\"}\n{\"ok\":false,\"tags\":[],\"x\":\"6\"}\n"
        );
        let mut buf = Vec::new();
        let mut w = RecordWriter::new(Format::Csv, &mut buf);
        rows.iter().for_each(|r| w.write(r).unwrap());
        assert_eq!(String::from_utf8(buf).unwrap(), "ok,tags,x\ntrue,\"[1,2]\",-98\nfalse,[],6\n");
    }
}
