//! Line-delimited JSON clients for external helper processes:
//! a sentence encoder (`{"text": …}` → `{"vector": [floats]}`) and an
//! optional grammar checker (`{"text": …}` → `{"errors": <int>}`).

use hardlabel::{SentenceEncoder, SimError, TokenizedText};
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpStream;
use std::sync::Mutex;
use std::time::Duration;

struct LineConn {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl LineConn {
    fn connect(addr: &str, timeout: Duration) -> io::Result<LineConn> {
        let stream = TcpStream::connect(addr)?;
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        Ok(LineConn {
            writer: stream.try_clone()?,
            reader: BufReader::new(stream),
        })
    }

    fn round_trip(&mut self, request: &serde_json::Value) -> io::Result<String> {
        let mut line = serde_json::to_string(request)?;
        line.push('\n');
        self.writer.write_all(line.as_bytes())?;
        self.writer.flush()?;
        let mut response = String::new();
        if self.reader.read_line(&mut response)? == 0 {
            return Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "peer closed connection",
            ));
        }
        Ok(response)
    }
}

/// Sentence encoder served by an external process over a local socket.
/// One connection, serialized requests; safe to share across attack workers.
pub struct ExternalEncoder {
    conn: Mutex<LineConn>,
}

impl ExternalEncoder {
    pub fn connect(addr: &str, timeout: Duration) -> io::Result<ExternalEncoder> {
        Ok(ExternalEncoder {
            conn: Mutex::new(LineConn::connect(addr, timeout)?),
        })
    }
}

impl SentenceEncoder for ExternalEncoder {
    fn encode(&self, text: &TokenizedText) -> Result<Vec<f64>, SimError> {
        let request = serde_json::json!({ "text": text.detokenize() });
        let mut conn = self.conn.lock().map_err(|_| {
            SimError::Encoder("encoder connection poisoned".into())
        })?;
        let response = conn
            .round_trip(&request)
            .map_err(|e| SimError::Encoder(e.to_string()))?;
        let value: serde_json::Value =
            serde_json::from_str(&response).map_err(|e| SimError::Encoder(e.to_string()))?;
        let vector = value
            .get("vector")
            .and_then(|v| v.as_array())
            .ok_or_else(|| SimError::Encoder("response missing `vector`".into()))?;
        vector
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| SimError::Encoder("non-numeric vector entry".into()))
            })
            .collect()
    }
}

/// Grammar-checker hook with the same line protocol. When configured, the
/// suite reports the grammar-error increase of adversarial texts.
pub struct GrammarClient {
    conn: Mutex<LineConn>,
}

impl GrammarClient {
    pub fn connect(addr: &str, timeout: Duration) -> io::Result<GrammarClient> {
        Ok(GrammarClient {
            conn: Mutex::new(LineConn::connect(addr, timeout)?),
        })
    }

    /// Number of grammar errors the checker reports for `text`.
    pub fn check(&self, text: &str) -> io::Result<u64> {
        let request = serde_json::json!({ "text": text });
        let mut conn = self
            .conn
            .lock()
            .map_err(|_| io::Error::other("grammar connection poisoned"))?;
        let response = conn.round_trip(&request)?;
        let value: serde_json::Value = serde_json::from_str(&response)?;
        value
            .get("errors")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| io::Error::other("response missing `errors`"))
    }
}
