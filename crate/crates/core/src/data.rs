//! Embedding records, corpora, binary masks and their file formats.
//!
//! Binary embedding file (`EMB1`), all little-endian:
//!
//! ```text
//! "EMB1" | u32 N | u32 D | u8 split (0 = core, 1 = finetune)
//! N x ( u64 id | f32 measured_iou (NaN = absent) | D x f32 )
//! ```
//!
//! CSV embedding file: header `id,split,iou,v0,...,v{D-1}`, one record per row, empty `iou`
//! field for an absent IoU. Masks are read from PGM (`P2`/`P5`) or PBM (`P1`/`P4`).

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::binio::{read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};

const EMB_MAGIC: &[u8; 4] = b"EMB1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Core,
    Finetune,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Core => "core",
            Split::Finetune => "finetune",
        }
    }

    fn flag(self) -> u8 {
        match self {
            Split::Core => 0,
            Split::Finetune => 1,
        }
    }

    fn from_flag(flag: u8) -> Result<Self> {
        match flag {
            0 => Ok(Split::Core),
            1 => Ok(Split::Finetune),
            other => Err(Error::format(
                "embedding header",
                format!("unknown split flag {other}"),
            )),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "core" => Ok(Split::Core),
            "finetune" => Ok(Split::Finetune),
            other => Err(Error::Invalid(format!(
                "split must be `core` or `finetune`, got `{other}`"
            ))),
        }
    }
}

/// One sample's latent vector.
///
/// `meta` is carried in memory only; neither file format stores it.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: u64,
    pub split: Split,
    pub vector: Vec<f32>,
    pub measured_iou: Option<f32>,
    pub meta: Option<String>,
}

impl EmbeddingRecord {
    pub fn core(id: u64, vector: Vec<f32>, iou: f32) -> Self {
        Self {
            id,
            split: Split::Core,
            vector,
            measured_iou: Some(iou),
            meta: None,
        }
    }

    pub fn finetune(id: u64, vector: Vec<f32>) -> Self {
        Self {
            id,
            split: Split::Finetune,
            vector,
            measured_iou: None,
            meta: None,
        }
    }

    pub fn vector_f64(&self) -> Vec<f64> {
        self.vector.iter().map(|&x| f64::from(x)).collect()
    }

    fn validate(&self, dimension: usize) -> std::result::Result<(), String> {
        if self.vector.len() != dimension {
            return Err(format!(
                "dimension mismatch: expected {dimension}, got {}",
                self.vector.len()
            ));
        }
        if let Some(pos) = self.vector.iter().position(|x| !x.is_finite()) {
            return Err(format!("non-finite value at component {pos}"));
        }
        match self.measured_iou {
            Some(iou) if !(0.0..=1.0).contains(&iou) => {
                Err(format!("measured_iou {iou} outside [0, 1]"))
            }
            None if self.split == Split::Core => {
                Err("core record is missing measured_iou".to_string())
            }
            _ => Ok(()),
        }
    }
}

/// An ordered, validated collection of records sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    records: Vec<EmbeddingRecord>,
    dimension: usize,
}

impl Corpus {
    pub fn new(dimension: usize, records: Vec<EmbeddingRecord>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::out_of_range("dimension", 0, ">= 1"));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for (index, rec) in records.iter().enumerate() {
            rec.validate(dimension)
                .map_err(|msg| Error::Record { index, msg })?;
            if !seen.insert(rec.id) {
                return Err(Error::Record {
                    index,
                    msg: format!("duplicate id {}", rec.id),
                });
            }
        }
        Ok(Self { records, dimension })
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<EmbeddingRecord> {
        self.records
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.id).collect()
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.records
            .iter()
            .map(EmbeddingRecord::vector_f64)
            .collect()
    }

    /// Measured IoU per record; `None` where absent.
    pub fn ious(&self) -> Vec<Option<f64>> {
        self.records
            .iter()
            .map(|r| r.measured_iou.map(f64::from))
            .collect()
    }

    pub fn split_of(&self) -> Option<Split> {
        let first = self.records.first()?.split;
        self.records
            .iter()
            .all(|r| r.split == first)
            .then_some(first)
    }

    /// Records of `self` followed by those of `other`; ids must stay unique.
    pub fn concat(&self, other: &Corpus) -> Result<Corpus> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        let mut records = self.records.clone();
        records.extend(other.records.iter().cloned());
        Corpus::new(self.dimension, records)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Binary,
    Csv,
}

impl FileFormat {
    /// `.csv` maps to CSV, anything else to the binary container.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::Binary,
        }
    }
}

impl FromStr for FileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "bin" => Ok(FileFormat::Binary),
            "csv" => Ok(FileFormat::Csv),
            other => Err(Error::Invalid(format!("unknown format `{other}`"))),
        }
    }
}

pub fn load_embeddings(path: &Path, format: FileFormat) -> Result<Corpus> {
    match format {
        FileFormat::Binary => decode_binary(&read_file(path)?),
        FileFormat::Csv => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            decode_csv(&text)
        }
    }
}

pub fn save_embeddings(corpus: &Corpus, path: &Path, format: FileFormat) -> Result<()> {
    let bytes = match format {
        FileFormat::Binary => encode_binary(corpus)?,
        FileFormat::Csv => encode_csv(corpus)?.into_bytes(),
    };
    write_file(path, &bytes)
}

pub fn encode_binary(corpus: &Corpus) -> Result<Vec<u8>> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus has no records to save"));
    }
    let split = corpus.split_of().ok_or_else(|| {
        Error::Invalid(
            "binary embedding files hold a single split; corpus mixes core and finetune".into(),
        )
    })?;
    let mut w = Writer::new();
    w.bytes(EMB_MAGIC);
    w.u32(u32::try_from(corpus.len()).map_err(|_| Error::Invalid("too many records".into()))?);
    w.u32(
        u32::try_from(corpus.dimension)
            .map_err(|_| Error::Invalid("dimension too large".into()))?,
    );
    w.u8(split.flag());
    for rec in &corpus.records {
        w.u64(rec.id);
        w.f32(rec.measured_iou.unwrap_or(f32::NAN));
        for &x in &rec.vector {
            w.f32(x);
        }
    }
    Ok(w.into_inner())
}

pub fn decode_binary(bytes: &[u8]) -> Result<Corpus> {
    let mut r = Reader::new(bytes, "embedding header");
    r.magic(EMB_MAGIC)?;
    let n = r.u32()? as usize;
    let dimension = r.u32()? as usize;
    let split = Split::from_flag(r.u8()?)?;
    if dimension == 0 {
        return Err(Error::format("embedding header", "dimension must be >= 1"));
    }
    let record_len = 12 + 4 * dimension;
    let mut records = Vec::with_capacity(n.min(r.remaining() / record_len + 1));
    for index in 0..n {
        let chunk = r.take(record_len).map_err(|_| Error::Record {
            index,
            msg: "truncated record".into(),
        })?;
        let mut rr = Reader::new(chunk, "embedding record");
        let id = rr.u64()?;
        let iou = rr.f32()?;
        let vector = (0..dimension)
            .map(|_| rr.f32())
            .collect::<Result<Vec<_>>>()?;
        records.push(EmbeddingRecord {
            id,
            split,
            vector,
            measured_iou: (!iou.is_nan()).then_some(iou),
            meta: None,
        });
    }
    r.finish()?;
    Corpus::new(dimension, records)
}

pub fn encode_csv(corpus: &Corpus) -> Result<String> {
    use std::fmt::Write;

    if corpus.is_empty() {
        return Err(Error::Empty("corpus has no records to save"));
    }
    let mut out = String::from("id,split,iou");
    for i in 0..corpus.dimension {
        write!(out, ",v{i}").unwrap();
    }
    out.push('\n');
    for rec in &corpus.records {
        write!(out, "{},{},", rec.id, rec.split).unwrap();
        if let Some(iou) = rec.measured_iou {
            write!(out, "{iou}").unwrap();
        }
        for x in &rec.vector {
            // shortest representation that reads back to the same f32 (at most 9 digits)
            write!(out, ",{x}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn decode_csv(text: &str) -> Result<Corpus> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format("embedding csv", "missing header"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 4 || cols[..3] != ["id", "split", "iou"] {
        return Err(Error::format(
            "embedding csv",
            "header must be `id,split,iou,v0,...`",
        ));
    }
    for (i, c) in cols[3..].iter().enumerate() {
        if *c != format!("v{i}") {
            return Err(Error::format(
                "embedding csv",
                format!("expected column `v{i}`, found `{c}`"),
            ));
        }
    }
    let dimension = cols.len() - 3;

    let mut records = Vec::new();
    for (index, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let rec = parse_csv_row(line, dimension).map_err(|msg| Error::Record { index, msg })?;
        records.push(rec);
    }
    Corpus::new(dimension, records)
}

fn parse_csv_row(line: &str, dimension: usize) -> std::result::Result<EmbeddingRecord, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != dimension + 3 {
        return Err(format!(
            "expected {} fields, found {}",
            dimension + 3,
            fields.len()
        ));
    }
    let id = fields[0]
        .parse::<u64>()
        .map_err(|e| format!("bad id `{}`: {e}", fields[0]))?;
    let split = fields[1].parse::<Split>().map_err(|e| e.to_string())?;
    let measured_iou = match fields[2] {
        "" => None,
        s => Some(
            s.parse::<f32>()
                .map_err(|e| format!("bad iou `{s}`: {e}"))?,
        ),
    };
    let vector = fields[3..]
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.parse::<f32>()
                .map_err(|e| format!("bad value `{s}` at component {i}: {e}"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(EmbeddingRecord {
        id,
        split,
        vector,
        measured_iou,
        meta: None,
    })
}

/// A building / not-building raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Invalid(format!(
                "mask must have positive size, got {width}x{height}"
            )));
        }
        if bits.len() != width * height {
            return Err(Error::Invalid(format!(
                "mask {width}x{height} needs {} bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let bits = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Binary PGM (`P5`, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
        out
    }
}

pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    parse_mask(&read_file(path)?)
}

/// Parses PBM (`P1`, `P4`) or PGM (`P2`, `P5`). Gray pixels above half of maxval
/// (above 127 for 8-bit files) and PBM 1-bits are foreground.
pub fn parse_mask(bytes: &[u8]) -> Result<BinaryMask> {
    let mut p = PnmParser { bytes, pos: 0 };
    let magic = p.token()?;
    let width = p.number("width")?;
    let height = p.number("height")?;
    if width == 0 || height == 0 {
        return Err(Error::format(
            "mask header",
            "width and height must be positive",
        ));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::format("mask header", "size overflow"))?;
    let bits = match magic.as_slice() {
        b"P1" => {
            let mut bits = Vec::with_capacity(n);
            while bits.len() < n {
                p.skip_space();
                match p.bytes.get(p.pos) {
                    Some(b'0') => bits.push(false),
                    Some(b'1') => bits.push(true),
                    Some(c) => {
                        return Err(Error::format(
                            "mask data",
                            format!("unexpected byte {c:#04x} in P1 raster"),
                        ))
                    }
                    None => return Err(truncated(bits.len(), n)),
                }
                p.pos += 1;
            }
            bits
        }
        b"P4" => {
            p.single_whitespace()?;
            let row_bytes = width.div_ceil(8);
            let raster = p.rest();
            if raster.len() < row_bytes * height {
                return Err(truncated(raster.len() * 8, n));
            }
            (0..height)
                .flat_map(|y| (0..width).map(move |x| (x, y)))
                .map(|(x, y)| raster[y * row_bytes + x / 8] & (0x80 >> (x % 8)) != 0)
                .collect()
        }
        b"P2" | b"P5" => {
            let maxval = p.number("maxval")?;
            if maxval == 0 || maxval > 65535 {
                return Err(Error::format(
                    "mask header",
                    format!("maxval {maxval} outside 1..=65535"),
                ));
            }
            let on = |v: usize| -> Result<bool> {
                if v > maxval {
                    return Err(Error::format(
                        "mask data",
                        format!("pixel value {v} exceeds maxval {maxval}"),
                    ));
                }
                Ok(2 * v > maxval)
            };
            if magic == b"P2" {
                let mut bits = Vec::with_capacity(n);
                for i in 0..n {
                    let v = p.number("pixel").map_err(|_| truncated(i, n))?;
                    bits.push(on(v)?);
                }
                bits
            } else {
                p.single_whitespace()?;
                let raster = p.rest();
                let bpp = if maxval < 256 { 1 } else { 2 };
                if raster.len() < n * bpp {
                    return Err(truncated(raster.len() / bpp, n));
                }
                (0..n)
                    .map(|i| {
                        let v = if bpp == 1 {
                            raster[i] as usize
                        } else {
                            u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as usize
                        };
                        on(v)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        }
        other => {
            return Err(Error::format(
                "mask header",
                format!("unsupported magic {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };
    BinaryMask::new(width, height, bits)
}

fn truncated(got: usize, needed: usize) -> Error {
    Error::format(
        "mask data",
        format!("truncated raster: {got} of {needed} pixels"),
    )
}

struct PnmParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PnmParser<'_> {
    fn skip_space(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<Vec<u8>> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !self.bytes[self.pos].is_ascii_whitespace()
            && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format("mask header", "unexpected end of file"));
        }
        Ok(self.bytes[start..self.pos].to_vec())
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(&tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                Error::format(
                    "mask header",
                    format!("bad {what} `{}`", String::from_utf8_lossy(&tok)),
                )
            })
    }

    fn single_whitespace(&mut self) -> Result<()> {
        match self.bytes.get(self.pos) {
            Some(c) if c.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(Error::format(
                "mask header",
                "missing whitespace before raster",
            )),
        }
    }

    fn rest(&self) -> &[u8] {
        &self.bytes[self.pos..]
    }
}
