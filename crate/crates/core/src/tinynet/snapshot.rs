//! Parameter snapshot wire format.
//!
//! ```text
//! tinynet-params v1\n
//! <tensor count>\n
//! <name> <d0>x<d1>x...\n      (one line per tensor)
//! <little-endian f64 data for every tensor, in header order>
//! ```

use crate::error::NetError;

const MAGIC: &str = "tinynet-params v1";
const MAX_TENSORS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Self {
        Tensor { name: name.into(), shape, data }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSnapshot {
    pub tensors: Vec<Tensor>,
}

impl ParamSnapshot {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut header = format!("{MAGIC}\n{}\n", self.tensors.len());
        for t in &self.tensors {
            let dims: Vec<String> = t.shape.iter().map(usize::to_string).collect();
            header.push_str(&format!("{} {}\n", t.name, dims.join("x")));
        }
        let total: usize = self.tensors.iter().map(|t| t.data.len()).sum();
        let mut out = Vec::with_capacity(header.len() + total * 8);
        out.extend_from_slice(header.as_bytes());
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, NetError> {
        let err = |m: &str| NetError::Snapshot(m.to_string());
        let mut pos = 0;
        let mut next_line = || -> Result<&str, NetError> {
            let rest = &bytes[pos..];
            let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| err("unterminated header line"))?;
            pos += end + 1;
            std::str::from_utf8(&rest[..end]).map_err(|_| err("header is not utf-8"))
        };
        if next_line()? != MAGIC {
            return Err(err("bad magic line"));
        }
        let count: usize = next_line()?.trim().parse().map_err(|_| err("bad tensor count"))?;
        if count > MAX_TENSORS {
            return Err(err("too many tensors"));
        }
        let mut headers = Vec::with_capacity(count);
        let mut total: usize = 0;
        for _ in 0..count {
            let line = next_line()?;
            let (name, dims) = line.split_once(' ').ok_or_else(|| err("tensor line needs name and shape"))?;
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_graphic()) {
                return Err(err("invalid tensor name"));
            }
            let shape = dims
                .split('x')
                .map(|d| d.parse::<usize>().map_err(|_| err("bad dimension")))
                .collect::<Result<Vec<_>, _>>()?;
            let len = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| err("shape overflows"))?;
            total = total.checked_add(len).ok_or_else(|| err("shape overflows"))?;
            headers.push((name.to_string(), shape, len));
        }
        let data = &bytes[pos..];
        if total.checked_mul(8) != Some(data.len()) {
            return Err(err("data length does not match header"));
        }
        let mut values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let tensors = headers
            .into_iter()
            .map(|(name, shape, len)| Tensor { name, shape, data: values.by_ref().take(len).collect() })
            .collect();
        Ok(ParamSnapshot { tensors })
    }
}
