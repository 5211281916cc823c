//! Report matrices and their on-disk formats.
//!
//! Labels are 0-based in every format. For the sign alphabet, label 0 is the
//! `-1` symbol and label 1 is `+1`.
//!
//! CSV: header `client,0,1,...,m-1`, then one row per client with the client
//! index followed by its integer labels.
//!
//! Binary (all integers little-endian):
//!
//! ```text
//! "KFCA"  magic, 4 bytes
//! u8      version (1)
//! u32     L
//! u32     n (clients)
//! u32     m (tasks)
//! u8 * n*m  labels, row-major; requires L <= 256
//! ```

use crate::error::{Error, Result};
use crate::world::{Label, LabelSpace};

pub const MAGIC: &[u8; 4] = b"KFCA";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 4 * 3;

/// Minimum task count: one bonus task and two disjoint penalty tasks.
pub const MIN_TASKS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportMatrix {
    labels: LabelSpace,
    clients: usize,
    tasks: usize,
    data: Vec<Label>,
    round: usize,
}

impl ReportMatrix {
    pub fn from_rows(labels: LabelSpace, rows: Vec<Vec<Label>>, round: usize) -> Result<Self> {
        let clients = rows.len();
        let tasks = rows.first().map_or(0, Vec::len);
        if clients == 0 {
            return Err(Error::Format("report matrix has no clients".into()));
        }
        if tasks < MIN_TASKS {
            return Err(Error::TooFewTasks(tasks));
        }
        let mut data = Vec::with_capacity(clients * tasks);
        for row in rows {
            if row.len() != tasks {
                return Err(Error::LengthMismatch {
                    left: tasks,
                    right: row.len(),
                });
            }
            for &r in &row {
                labels.check(r as usize)?;
            }
            data.extend(row);
        }
        Ok(Self {
            labels,
            clients,
            tasks,
            data,
            round,
        })
    }

    pub fn labels(&self) -> LabelSpace {
        self.labels
    }

    pub fn clients(&self) -> usize {
        self.clients
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn row(&self, client: usize) -> &[Label] {
        &self.data[client * self.tasks..(client + 1) * self.tasks]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Label]> {
        self.data.chunks_exact(self.tasks)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 2 + 16);
        out.push_str("client");
        for k in 0..self.tasks {
            out.push(',');
            out.push_str(&k.to_string());
        }
        out.push('\n');
        for (i, row) in self.rows().enumerate() {
            out.push_str(&i.to_string());
            for &r in row {
                out.push(',');
                out.push_str(&r.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV layout. With `labels = None` the label count is
    /// inferred as `max(2, max label + 1)`.
    pub fn from_csv(text: &str, labels: Option<LabelSpace>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.get(0) != Some("client") {
            return Err(Error::Parse {
                line: 1,
                message: "header must start with `client`".into(),
            });
        }
        let tasks = header.len() - 1;
        let mut rows = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let line = idx + 2;
            let record = record?;
            if record.len() != tasks + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, got {}", tasks + 1, record.len()),
                });
            }
            let client: usize = record[0].parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad client index {:?}", &record[0]),
            })?;
            if client != rows.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected client {}, got {client}", rows.len()),
                });
            }
            let row = record
                .iter()
                .skip(1)
                .map(|f| {
                    f.parse::<Label>().map_err(|_| Error::Parse {
                        line,
                        message: format!("bad label {f:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let labels = match labels {
            Some(l) => l,
            None => {
                let max = rows.iter().flatten().copied().max().unwrap_or(0) as usize;
                LabelSpace::new((max + 1).max(2))?
            }
        };
        Self::from_rows(labels, rows, 0)
    }

    pub fn to_binary(&self) -> Result<Vec<u8>> {
        let l = self.labels.size();
        if l > 256 {
            return Err(Error::Format(format!("binary format needs L <= 256, got {l}")));
        }
        let as_u32 = |v: usize, what: &str| {
            u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in u32")))
        };
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&as_u32(l, "L")?.to_le_bytes());
        out.extend_from_slice(&as_u32(self.clients, "n")?.to_le_bytes());
        out.extend_from_slice(&as_u32(self.tasks, "m")?.to_le_bytes());
        out.extend(self.data.iter().map(|&r| r as u8));
        Ok(out)
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format("truncated header".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Format(format!("unsupported version {}", bytes[4])));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let (l, n, m) = (word(5), word(9), word(13));
        if l > 256 {
            return Err(Error::Format(format!("binary format needs L <= 256, got {l}")));
        }
        let labels = LabelSpace::new(l)?;
        let body = &bytes[HEADER_LEN..];
        let expected = n
            .checked_mul(m)
            .ok_or_else(|| Error::Format("n * m overflows".into()))?;
        if body.len() != expected {
            return Err(Error::Format(format!(
                "expected {expected} label bytes, got {}",
                body.len()
            )));
        }
        if m == 0 {
            return Err(Error::TooFewTasks(0));
        }
        let rows = body
            .chunks_exact(m)
            .map(|c| c.iter().map(|&b| b as Label).collect())
            .collect();
        Self::from_rows(labels, rows, 0)
    }

    /// Decodes either format, sniffing the binary magic.
    pub fn decode(bytes: &[u8], labels: Option<LabelSpace>) -> Result<Self> {
        if bytes.starts_with(MAGIC) {
            let m = Self::from_binary(bytes)?;
            if let Some(l) = labels {
                if l != m.labels {
                    return Err(Error::Format(format!(
                        "file declares L = {}, expected {}",
                        m.labels.size(),
                        l.size()
                    )));
                }
            }
            Ok(m)
        } else {
            let text = std::str::from_utf8(bytes)
                .map_err(|_| Error::Format("report file is neither KFCA binary nor UTF-8".into()))?;
            Self::from_csv(text, labels)
        }
    }
}
