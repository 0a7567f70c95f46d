//! Versioned binary model files.
//!
//! All integers and floats are little-endian; floats are IEEE-754 binary64
//! written bit-for-bit. Strings are UTF-8 with a `u32` byte-length prefix.
//!
//! ```text
//! file    := magic[8] = "CATMATSV"  version:u32  section{5}
//! section := tag[4]  payload_len:u64  payload[payload_len]
//!
//! META  created_unix:i64  seed:u64  corpus_size:u64  c:f64  max_epochs:u64
//!       dual_gap_tol:f64  min_class_count:u64  folds:u64
//! VOCB  n_docs:u64  count:u32  { word:str  doc_freq:u64  corpus_freq:u64 }*count
//! IDFT  n_docs:u64  count:u32  idf:f64*count
//! CLSS  count:u32  code:u16*count                      (strictly ascending)
//! PAIR  count:u32  { positive:u16  negative:u16  bias:f64  sigmoid_a:f64
//!                    sigmoid_b:f64  nnz:u32  index:u32*nnz  weight:f64*nnz }*count
//! ```
//!
//! Sections appear exactly once, in the order above, and nothing follows the
//! last one. Pair weights are stored sparsely: only non-zero entries, indices
//! strictly increasing.

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::calibrate::{CalibratedPair, SigmoidParams};
use crate::learner::BinaryLinearClassifier;
use crate::model::{ModelConfig, ModelMetadata, MulticlassModel};
use crate::textprep::Vocabulary;
use crate::vectorize::IdfTable;
use crate::ClassCode;

pub const MAGIC: [u8; 8] = *b"CATMATSV";
pub const FORMAT_VERSION: u32 = 1;

const SECTIONS: [[u8; 4]; 5] = [*b"META", *b"VOCB", *b"IDFT", *b"CLSS", *b"PAIR"];

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("not a model file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported model format version {found} (this build reads version {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("section {section} incomplete")]
    Incomplete { section: String },
    #[error("expected section {expected}, found {found:?}")]
    UnexpectedSection { expected: String, found: String },
    #[error("section {section} invalid: {message}")]
    Invalid { section: String, message: String },
    #[error("trailing data after the last section")]
    TrailingData,
}

fn tag_name(tag: &[u8; 4]) -> String {
    String::from_utf8_lossy(tag).into_owned()
}

/// Encodes the model. The output depends only on the model contents.
pub fn to_bytes(model: &MulticlassModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let payloads = [
        encode_meta(&model.metadata),
        encode_vocabulary(model.vocabulary()),
        encode_idf(model.idf()),
        encode_classes(model.classes()),
        encode_pairs(model.pairs()),
    ];
    for (tag, payload) in SECTIONS.iter().zip(payloads) {
        out.extend_from_slice(tag);
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
    }
    out
}

/// Short content hash used as the model version string.
pub fn fingerprint(bytes: &[u8]) -> String {
    hex_prefix(&Sha256::digest(bytes))
}

fn hex_prefix(digest: &[u8]) -> String {
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Writes the model atomically (temporary file in the same directory, then
/// rename). Returns the number of bytes written.
pub fn save(model: &MulticlassModel, path: &Path) -> Result<u64, PersistError> {
    let bytes = to_bytes(model);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new().prefix(".model-").tempfile_in(dir)?;
    tmp.write_all(&bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| PersistError::Io(e.error))?;
    Ok(bytes.len() as u64)
}

/// A model read from disk together with its content fingerprint.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: MulticlassModel,
    pub fingerprint: String,
}

pub fn load(path: &Path) -> Result<LoadedModel, PersistError> {
    read_model(BufReader::new(File::open(path)?))
}

/// Reads and validates a model in a single sequential pass.
pub fn read_model<R: Read>(reader: R) -> Result<LoadedModel, PersistError> {
    let mut reader = HashingReader {
        inner: reader,
        hasher: Sha256::new(),
    };
    let mut header = [0u8; 12];
    read_exact_or(&mut reader, &mut header, || PersistError::BadMagic)?;
    if header[..8] != MAGIC {
        return Err(PersistError::BadMagic);
    }
    let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(PersistError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }

    let meta = decode_meta(&mut read_section(&mut reader, &SECTIONS[0])?)?;
    let vocabulary = decode_vocabulary(&mut read_section(&mut reader, &SECTIONS[1])?)?;
    let idf = decode_idf(&mut read_section(&mut reader, &SECTIONS[2])?)?;
    let classes = decode_classes(&mut read_section(&mut reader, &SECTIONS[3])?)?;
    let pairs = decode_pairs(&mut read_section(&mut reader, &SECTIONS[4])?, vocabulary.len())?;

    let mut probe = [0u8; 1];
    if reader.read(&mut probe)? != 0 {
        return Err(PersistError::TrailingData);
    }
    if idf.n_docs() != vocabulary.n_docs() {
        return Err(invalid(
            &SECTIONS[2],
            format!(
                "document count {} differs from vocabulary's {}",
                idf.n_docs(),
                vocabulary.n_docs()
            ),
        ));
    }
    let model = MulticlassModel::from_parts(meta, vocabulary, idf, classes, pairs)
        .map_err(|message| invalid(&SECTIONS[4], message))?;
    Ok(LoadedModel {
        model,
        fingerprint: hex_prefix(&reader.hasher.finalize()),
    })
}

struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

fn read_exact_or<R: Read>(
    reader: &mut R,
    buf: &mut [u8],
    on_eof: impl FnOnce() -> PersistError,
) -> Result<(), PersistError> {
    match reader.read_exact(buf) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Err(on_eof()),
        Err(e) => Err(e.into()),
    }
}

fn read_section<R: Read>(reader: &mut R, tag: &[u8; 4]) -> Result<Cursor, PersistError> {
    let incomplete = || PersistError::Incomplete { section: tag_name(tag) };
    let mut head = [0u8; 12];
    read_exact_or(reader, &mut head, incomplete)?;
    if &head[..4] != tag {
        return Err(PersistError::UnexpectedSection {
            expected: tag_name(tag),
            found: String::from_utf8_lossy(&head[..4]).into_owned(),
        });
    }
    let len = u64::from_le_bytes(head[4..12].try_into().unwrap());
    let mut payload = Vec::new();
    reader.by_ref().take(len).read_to_end(&mut payload)?;
    if (payload.len() as u64) < len {
        return Err(incomplete());
    }
    Ok(Cursor {
        data: payload,
        pos: 0,
        tag: *tag,
    })
}

fn invalid(tag: &[u8; 4], message: impl Into<String>) -> PersistError {
    PersistError::Invalid {
        section: tag_name(tag),
        message: message.into(),
    }
}

/// Bounds-checked reader over one section payload.
struct Cursor {
    data: Vec<u8>,
    pos: usize,
    tag: [u8; 4],
}

impl Cursor {
    fn take(&mut self, n: usize) -> Result<&[u8], PersistError> {
        if self.data.len() - self.pos < n {
            return Err(PersistError::Incomplete {
                section: tag_name(&self.tag),
            });
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16, PersistError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, PersistError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64, PersistError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, PersistError> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn usize(&mut self) -> Result<usize, PersistError> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.invalid(format!("value {v} does not fit in usize")))
    }

    fn string(&mut self) -> Result<String, PersistError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?.to_vec();
        String::from_utf8(bytes).map_err(|_| self.invalid("string is not valid UTF-8"))
    }

    /// Element count, rejected early if the remaining payload cannot hold it.
    fn count(&mut self, min_element_size: usize) -> Result<usize, PersistError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_element_size) > self.data.len() - self.pos {
            return Err(PersistError::Incomplete {
                section: tag_name(&self.tag),
            });
        }
        Ok(n)
    }

    fn invalid(&self, message: impl Into<String>) -> PersistError {
        invalid(&self.tag, message)
    }

    fn finish(self) -> Result<(), PersistError> {
        if self.pos != self.data.len() {
            return Err(self.invalid(format!("{} unread bytes at end of section", self.data.len() - self.pos)));
        }
        Ok(())
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_bits().to_le_bytes());
}

fn encode_meta(meta: &ModelMetadata) -> Vec<u8> {
    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(&meta.created_unix.to_le_bytes());
    put_u64(&mut out, meta.config.seed);
    put_u64(&mut out, meta.corpus_size);
    put_f64(&mut out, meta.config.c);
    put_u64(&mut out, meta.config.max_epochs as u64);
    put_f64(&mut out, meta.config.dual_gap_tol);
    put_u64(&mut out, meta.config.min_class_count as u64);
    put_u64(&mut out, meta.config.folds as u64);
    out
}

fn decode_meta(cur: &mut Cursor) -> Result<ModelMetadata, PersistError> {
    let created_unix = cur.i64()?;
    let seed = cur.u64()?;
    let corpus_size = cur.u64()?;
    let config = ModelConfig {
        seed,
        c: cur.f64()?,
        max_epochs: cur.usize()?,
        dual_gap_tol: cur.f64()?,
        min_class_count: cur.usize()?,
        folds: cur.usize()?,
    };
    config.validate().map_err(|e| cur.invalid(e.to_string()))?;
    let meta = ModelMetadata {
        created_unix,
        config,
        corpus_size,
    };
    finish(cur)?;
    Ok(meta)
}

fn encode_vocabulary(vocab: &Vocabulary) -> Vec<u8> {
    let mut out = Vec::new();
    put_u64(&mut out, vocab.n_docs());
    put_u32(&mut out, vocab.len() as u32);
    for (i, word) in vocab.words().iter().enumerate() {
        put_u32(&mut out, word.len() as u32);
        out.extend_from_slice(word.as_bytes());
        put_u64(&mut out, vocab.doc_freqs()[i]);
        put_u64(&mut out, vocab.corpus_freqs()[i]);
    }
    out
}

fn decode_vocabulary(cur: &mut Cursor) -> Result<Vocabulary, PersistError> {
    let n_docs = cur.u64()?;
    let count = cur.count(20)?;
    let mut words = Vec::with_capacity(count);
    let mut doc_freq = Vec::with_capacity(count);
    let mut corpus_freq = Vec::with_capacity(count);
    for _ in 0..count {
        words.push(cur.string()?);
        doc_freq.push(cur.u64()?);
        corpus_freq.push(cur.u64()?);
    }
    let vocab = Vocabulary::from_parts(words, doc_freq, corpus_freq, n_docs).map_err(|e| cur.invalid(e.to_string()))?;
    finish(cur)?;
    Ok(vocab)
}

fn encode_idf(idf: &IdfTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * idf.len());
    put_u64(&mut out, idf.n_docs());
    put_u32(&mut out, idf.len() as u32);
    for &v in idf.values() {
        put_f64(&mut out, v);
    }
    out
}

fn decode_idf(cur: &mut Cursor) -> Result<IdfTable, PersistError> {
    let n_docs = cur.u64()?;
    let count = cur.count(8)?;
    let values = (0..count).map(|_| cur.f64()).collect::<Result<Vec<_>, _>>()?;
    let idf = IdfTable::from_parts(n_docs, values).map_err(|e| cur.invalid(e.to_string()))?;
    finish(cur)?;
    Ok(idf)
}

fn encode_classes(classes: &[ClassCode]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 2 * classes.len());
    put_u32(&mut out, classes.len() as u32);
    for c in classes {
        out.extend_from_slice(&c.value().to_le_bytes());
    }
    out
}

fn class_code(cur: &mut Cursor) -> Result<ClassCode, PersistError> {
    let raw = cur.u16()?;
    ClassCode::new(raw).ok_or_else(|| cur.invalid(format!("class code {raw} exceeds four digits")))
}

fn decode_classes(cur: &mut Cursor) -> Result<Vec<ClassCode>, PersistError> {
    let count = cur.count(2)?;
    let classes = (0..count).map(|_| class_code(cur)).collect::<Result<Vec<_>, _>>()?;
    if let Some(w) = classes.windows(2).find(|w| w[0] >= w[1]) {
        return Err(cur.invalid(format!("class list not strictly ascending at {}", w[1])));
    }
    finish(cur)?;
    Ok(classes)
}

fn encode_pairs(pairs: &[CalibratedPair]) -> Vec<u8> {
    let mut out = Vec::new();
    put_u32(&mut out, pairs.len() as u32);
    for pair in pairs {
        let c = &pair.classifier;
        out.extend_from_slice(&c.positive_class.value().to_le_bytes());
        out.extend_from_slice(&c.negative_class.value().to_le_bytes());
        put_f64(&mut out, c.bias);
        put_f64(&mut out, pair.sigmoid.a);
        put_f64(&mut out, pair.sigmoid.b);
        let nonzero: Vec<(u32, f64)> = c
            .weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, &w)| (i as u32, w))
            .collect();
        put_u32(&mut out, nonzero.len() as u32);
        for &(i, _) in &nonzero {
            put_u32(&mut out, i);
        }
        for &(_, w) in &nonzero {
            put_f64(&mut out, w);
        }
    }
    out
}

fn decode_pairs(cur: &mut Cursor, dim: usize) -> Result<Vec<CalibratedPair>, PersistError> {
    let count = cur.count(32)?;
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let positive_class = class_code(cur)?;
        let negative_class = class_code(cur)?;
        let bias = cur.f64()?;
        let sigmoid = SigmoidParams {
            a: cur.f64()?,
            b: cur.f64()?,
        };
        let nnz = cur.count(12)?;
        let indices = (0..nnz).map(|_| cur.u32()).collect::<Result<Vec<_>, _>>()?;
        let mut weights = vec![0.0; dim];
        let mut previous: Option<u32> = None;
        for &index in &indices {
            let value = cur.f64()?;
            if index as usize >= dim || previous.is_some_and(|p| p >= index) {
                return Err(cur.invalid(format!(
                    "pair {positive_class}/{negative_class}: weight index {index} out of order or beyond {dim}"
                )));
            }
            if value == 0.0 || !value.is_finite() {
                return Err(cur.invalid(format!("pair {positive_class}/{negative_class}: stored weight {value}")));
            }
            weights[index as usize] = value;
            previous = Some(index);
        }
        pairs.push(CalibratedPair {
            classifier: BinaryLinearClassifier {
                positive_class,
                negative_class,
                weights,
                bias,
            },
            sigmoid,
        });
    }
    finish(cur)?;
    Ok(pairs)
}

fn finish(cur: &mut Cursor) -> Result<(), PersistError> {
    let tag = cur.tag;
    std::mem::replace(
        cur,
        Cursor {
            data: Vec::new(),
            pos: 0,
            tag,
        },
    )
    .finish()
}
