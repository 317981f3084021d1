//! Binary checkpoint format for optimizer state.
//!
//! Layout (all integers and floats little-endian, floats as raw IEEE-754 bits):
//!
//! ```text
//! magic      8 bytes   "SOAACKPT"
//! version    u16       currently 1
//! tag        u8        1 = soaa, 2 = adam/adamw
//! config     soaa: alpha beta1 beta2 gamma epsilon weight_decay (f64), total_steps (u64)
//!            adam: alpha beta1 beta2 epsilon weight_decay (f64), decoupled (u8)
//! t          u64
//! scalars    soaa only: dt l_avg pr (f64)
//! groups     u32
//! per group  len (u64), len × f64 first moment, len × f64 second moment
//! ```
//!
//! Decoding is strict: trailing bytes and invalid state are rejected.

use crate::baselines::{Adam, AdamConfig, AdamState};
use crate::error::{OptimError, Result};
use crate::optimizer::Optimizer;
use crate::soaa::{Soaa, SoaaConfig, SoaaState};

pub const MAGIC: &[u8; 8] = b"SOAACKPT";
pub const VERSION: u16 = 1;

const TAG_SOAA: u8 = 1;
const TAG_ADAM: u8 = 2;

type Groups = Vec<Vec<f64>>;

/// A decoded checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Soaa(Soaa),
    Adam(Adam),
}

impl Checkpoint {
    pub fn into_optimizer(self) -> Box<dyn Optimizer> {
        match self {
            Checkpoint::Soaa(o) => Box::new(o),
            Checkpoint::Adam(o) => Box::new(o),
        }
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn header(tag: u8) -> Self {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.0.extend_from_slice(&VERSION.to_le_bytes());
        w.0.push(tag);
        w
    }

    fn f64(&mut self, x: f64) {
        self.0.extend_from_slice(&x.to_bits().to_le_bytes());
    }

    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }

    fn groups(&mut self, first: &[Vec<f64>], second: &[Vec<f64>]) {
        self.0.extend_from_slice(&(first.len() as u32).to_le_bytes());
        for (a, b) in first.iter().zip(second) {
            self.u64(a.len() as u64);
            a.iter().chain(b).for_each(|&x| self.f64(x));
        }
    }
}

pub(crate) fn encode_soaa(opt: &Soaa) -> Vec<u8> {
    let c = opt.config();
    let st = opt.state();
    let mut w = Writer::header(TAG_SOAA);
    for x in [c.alpha, c.beta1, c.beta2, c.gamma, c.epsilon, c.weight_decay] {
        w.f64(x);
    }
    w.u64(c.total_steps);
    w.u64(st.t());
    w.f64(st.dt());
    w.f64(st.l_avg());
    w.f64(st.pr());
    let n = st.num_groups();
    let m: Vec<Vec<f64>> = (0..n).map(|g| st.m(g).to_vec()).collect();
    let s: Vec<Vec<f64>> = (0..n).map(|g| st.s(g).to_vec()).collect();
    w.groups(&m, &s);
    w.0
}

pub(crate) fn encode_adam(opt: &Adam) -> Vec<u8> {
    let c = opt.config();
    let st = opt.state();
    let mut w = Writer::header(TAG_ADAM);
    for x in [c.alpha, c.beta1, c.beta2, c.epsilon, c.weight_decay] {
        w.f64(x);
    }
    w.0.push(c.decoupled as u8);
    w.u64(st.t);
    w.groups(&st.m, &st.v);
    w.0
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, reason: impl Into<String>) -> OptimError {
        OptimError::Format {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.err(format!(
                "truncated: need {n} bytes for {what}, {} left",
                self.buf.len() - self.pos
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        self.u64(what).map(f64::from_bits)
    }

    fn vec(&mut self, len: usize, what: &str) -> Result<Vec<f64>> {
        (0..len).map(|_| self.f64(what)).collect()
    }

    fn groups(&mut self) -> Result<(Groups, Groups)> {
        let n = self.u32("group count")? as usize;
        if n == 0 {
            return Err(self.err("checkpoint holds no groups"));
        }
        let mut first = Vec::with_capacity(n.min(1024));
        let mut second = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let len = self.u64("group length")?;
            let remaining = (self.buf.len() - self.pos) as u64;
            if len == 0 || len.checked_mul(16).is_none_or(|b| b > remaining) {
                return Err(self.err(format!(
                    "group length {len} does not fit the {remaining} remaining bytes"
                )));
            }
            let len = len as usize;
            first.push(self.vec(len, "first moment")?);
            second.push(self.vec(len, "second moment")?);
        }
        Ok((first, second))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.err(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

/// Decodes any checkpoint written by this crate.
pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        r.pos = 0;
        return Err(r.err("bad magic"));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        r.pos -= 2;
        return Err(r.err(format!("unsupported version {version}")));
    }
    let tag = r.u8("optimizer tag")?;
    match tag {
        TAG_SOAA => {
            let at = r.pos;
            let config = SoaaConfig {
                alpha: r.f64("alpha")?,
                beta1: r.f64("beta1")?,
                beta2: r.f64("beta2")?,
                gamma: r.f64("gamma")?,
                epsilon: r.f64("epsilon")?,
                weight_decay: r.f64("weight_decay")?,
                total_steps: r.u64("total_steps")?,
            };
            config.validate().map_err(|e| OptimError::Format {
                offset: at,
                reason: e.to_string(),
            })?;
            let t = r.u64("t")?;
            let at = r.pos;
            let dt = r.f64("dt")?;
            let l_avg = r.f64("l_avg")?;
            let pr = r.f64("pr")?;
            let (m, s) = r.groups()?;
            r.finish()?;
            let state = SoaaState::from_parts(t, m, s, dt, l_avg, pr).map_err(|e| {
                OptimError::Format {
                    offset: at,
                    reason: e.to_string(),
                }
            })?;
            Ok(Checkpoint::Soaa(Soaa::from_parts(config, state)?))
        }
        TAG_ADAM => {
            let at = r.pos;
            let mut config = AdamConfig {
                alpha: r.f64("alpha")?,
                beta1: r.f64("beta1")?,
                beta2: r.f64("beta2")?,
                epsilon: r.f64("epsilon")?,
                weight_decay: r.f64("weight_decay")?,
                decoupled: false,
            };
            config.decoupled = match r.u8("decoupled flag")? {
                0 => false,
                1 => true,
                b => {
                    r.pos -= 1;
                    return Err(r.err(format!("invalid decoupled flag {b}")));
                }
            };
            config.validate().map_err(|e| OptimError::Format {
                offset: at,
                reason: e.to_string(),
            })?;
            let t = r.u64("t")?;
            let at = r.pos;
            let (m, v) = r.groups()?;
            r.finish()?;
            let bad = m.iter().flatten().any(|x| !x.is_finite())
                || v.iter().flatten().any(|x| !(x.is_finite() && *x >= 0.0));
            if bad {
                return Err(OptimError::Format {
                    offset: at,
                    reason: "non-finite or negative moment".into(),
                });
            }
            Ok(Checkpoint::Adam(Adam::from_parts(config, AdamState { t, m, v })?))
        }
        other => {
            r.pos -= 1;
            Err(r.err(format!("unknown optimizer tag {other}")))
        }
    }
}

impl Soaa {
    pub fn to_bytes(&self) -> Vec<u8> {
        encode_soaa(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match decode(bytes)? {
            Checkpoint::Soaa(o) => Ok(o),
            Checkpoint::Adam(_) => Err(OptimError::Format {
                offset: MAGIC.len() + 2,
                reason: "checkpoint holds an adam state".into(),
            }),
        }
    }
}

impl Adam {
    pub fn to_bytes(&self) -> Vec<u8> {
        encode_adam(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match decode(bytes)? {
            Checkpoint::Adam(o) => Ok(o),
            Checkpoint::Soaa(_) => Err(OptimError::Format {
                offset: MAGIC.len() + 2,
                reason: "checkpoint holds a soaa state".into(),
            }),
        }
    }
}
