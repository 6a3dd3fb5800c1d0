//! C ABI over the phrase-probe toolkit.
//!
//! Every function returns a [`PpStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and can be read with
//! [`pp_last_error_message`]. Handles are opaque and must be released with
//! their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use phrase_probe::cue::first_swap_distance;
use phrase_probe::dataset::overlap_of_words;
use phrase_probe::drift::{compare_dumps, DriftGrid};
use phrase_probe::embedding::{extract_rep, read_dump, Dump, ExtractOptions, Side};
use phrase_probe::encoder::{EncoderConfig, ToyEncoder};
use phrase_probe::metrics::{cosine, pearson, spearman};
use phrase_probe::model::tokenize;
use phrase_probe::{Error, InputMode, RepType};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Schema = 4,
    Input = 5,
    Shape = 6,
    Numeric = 7,
    Coverage = 8,
    Sampling = 9,
    Training = 10,
    NotFound = 11,
    /// The quantity does not exist for these inputs (not a failure).
    Undefined = 12,
    BufferTooSmall = 13,
    Panic = 14,
}

struct Failure(PpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.class() {
            "io" => PpStatus::Io,
            "schema" => PpStatus::Schema,
            "shape" => PpStatus::Shape,
            "numeric" => PpStatus::Numeric,
            "coverage" => PpStatus::Coverage,
            "sampling" => PpStatus::Sampling,
            "training" => PpStatus::Training,
            _ => PpStatus::Input,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<PpStatus, Failure>) -> PpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            PpStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `p` points to `len` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(PpStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `out` is writable.
    unsafe { out.write(value) };
    Ok(())
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, Failure> {
    s.parse().map_err(Failure::from)
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `u` and `v` point to `len` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pp_cosine(u: *const f64, v: *const f64, len: usize, out: *mut f64) -> PpStatus {
    guard(|| unsafe {
        let r = cosine(slice(u, len, "u")?, slice(v, len, "v")?)?;
        write_out(out, r, "out")?;
        Ok(PpStatus::Ok)
    })
}

/// # Safety
/// `xs` and `ys` point to `len` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pp_pearson(xs: *const f64, ys: *const f64, len: usize, out: *mut f64) -> PpStatus {
    guard(|| unsafe {
        let r = pearson(slice(xs, len, "xs")?, slice(ys, len, "ys")?)?;
        write_out(out, r, "out")?;
        Ok(PpStatus::Ok)
    })
}

/// # Safety
/// `xs` and `ys` point to `len` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pp_spearman(xs: *const f64, ys: *const f64, len: usize, out: *mut f64) -> PpStatus {
    guard(|| unsafe {
        let r = spearman(slice(xs, len, "xs")?, slice(ys, len, "ys")?)?;
        write_out(out, r, "out")?;
        Ok(PpStatus::Ok)
    })
}

/// Word overlap of two whitespace-tokenized phrases.
///
/// # Safety
/// `a` and `b` are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pp_word_overlap(a: *const c_char, b: *const c_char, out: *mut f64) -> PpStatus {
    guard(|| unsafe {
        let r = overlap_of_words(&tokenize(string(a, "a")?), &tokenize(string(b, "b")?))?;
        write_out(out, r, "out")?;
        Ok(PpStatus::Ok)
    })
}

/// Returns `Undefined` (and leaves `out` untouched) when the sentences have
/// no first swapping word.
///
/// # Safety
/// `s1` and `s2` are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pp_first_swap_distance(s1: *const c_char, s2: *const c_char, out: *mut usize) -> PpStatus {
    guard(|| unsafe {
        let (w1, w2) = (tokenize(string(s1, "s1")?), tokenize(string(s2, "s2")?));
        if out.is_null() {
            return Err(null("out"));
        }
        match first_swap_distance(&w1, &w2) {
            Some(d) => {
                write_out(out, d, "out")?;
                Ok(PpStatus::Ok)
            }
            None => Ok(PpStatus::Undefined),
        }
    })
}

/// # Safety
/// `s1` and `s2` are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pp_relative_swap_distance(s1: *const c_char, s2: *const c_char, out: *mut f64) -> PpStatus {
    guard(|| unsafe {
        let (w1, w2) = (tokenize(string(s1, "s1")?), tokenize(string(s2, "s2")?));
        if out.is_null() {
            return Err(null("out"));
        }
        match first_swap_distance(&w1, &w2) {
            Some(d) => {
                write_out(out, d as f64 / w1.len().max(w2.len()) as f64, "out")?;
                Ok(PpStatus::Ok)
            }
            None => Ok(PpStatus::Undefined),
        }
    })
}

/// An embedding dump loaded in memory.
pub struct PpDump(Dump);

/// # Safety
/// `path` is a NUL-terminated string; `out` is writable. On success `*out`
/// must later be released with [`pp_dump_free`].
#[no_mangle]
pub unsafe extern "C" fn pp_dump_open(path: *const c_char, out: *mut *mut PpDump) -> PpStatus {
    guard(|| unsafe {
        let path = string(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let dump = read_dump(Path::new(path))?;
        write_out(out, Box::into_raw(Box::new(PpDump(dump))), "out")?;
        Ok(PpStatus::Ok)
    })
}

/// # Safety
/// `dump` is NULL or a handle from [`pp_dump_open`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pp_dump_free(dump: *mut PpDump) {
    if !dump.is_null() {
        // SAFETY: the handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(dump) });
    }
}

/// Vector dimension, or 0 for NULL.
///
/// # Safety
/// `dump` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pp_dump_dim(dump: *const PpDump) -> usize {
    unsafe { dump.as_ref() }.map_or(0, |d| d.0.manifest().dim)
}

/// Encoder layers (layer 0 excluded), or 0 for NULL.
///
/// # Safety
/// `dump` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pp_dump_num_layers(dump: *const PpDump) -> usize {
    unsafe { dump.as_ref() }.map_or(0, |d| d.0.manifest().num_layers)
}

/// Number of records, or 0 for NULL.
///
/// # Safety
/// `dump` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pp_dump_len(dump: *const PpDump) -> usize {
    unsafe { dump.as_ref() }.map_or(0, |d| d.0.len())
}

/// Copies one vector into `out`, which must hold at least the dump's dim.
///
/// # Safety
/// `dump` is a live handle; the strings are NUL-terminated; `out` points to
/// `out_len` writable floats.
#[no_mangle]
pub unsafe extern "C" fn pp_dump_get_vector(
    dump: *const PpDump,
    item_id: *const c_char,
    side: *const c_char,
    layer: usize,
    rep: *const c_char,
    out: *mut f32,
    out_len: usize,
) -> PpStatus {
    guard(|| unsafe {
        let dump = &dump.as_ref().ok_or_else(|| null("dump"))?.0;
        let item = string(item_id, "item_id")?;
        let side: Side = parse(string(side, "side")?)?;
        let rep: RepType = parse(string(rep, "rep")?)?;
        let v = dump
            .get(item, side, layer, rep)
            .ok_or_else(|| Failure(PpStatus::NotFound, format!("no record for {item}/{side} layer {layer} {rep}")))?;
        copy_into(v, out, out_len)
    })
}

unsafe fn copy_into<T: Copy>(v: &[T], out: *mut T, out_len: usize) -> Result<PpStatus, Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    if out_len < v.len() {
        return Err(Failure(
            PpStatus::BufferTooSmall,
            format!("buffer holds {out_len}, need {}", v.len()),
        ));
    }
    // SAFETY: `out` has room for `v.len()` elements.
    unsafe { ptr::copy_nonoverlapping(v.as_ptr(), out, v.len()) };
    Ok(PpStatus::Ok)
}

/// Per-(layer, rep) mean cosine between two dumps.
pub struct PpGrid(DriftGrid);

/// # Safety
/// `a` and `b` are live dump handles; `out` is writable. On success `*out`
/// must later be released with [`pp_grid_free`].
#[no_mangle]
pub unsafe extern "C" fn pp_compare_dumps(a: *const PpDump, b: *const PpDump, out: *mut *mut PpGrid) -> PpStatus {
    guard(|| unsafe {
        let a = &a.as_ref().ok_or_else(|| null("a"))?.0;
        let b = &b.as_ref().ok_or_else(|| null("b"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = compare_dumps(a, b)?;
        write_out(out, Box::into_raw(Box::new(PpGrid(grid))), "out")?;
        Ok(PpStatus::Ok)
    })
}

/// Number of layer rows (layer 0 included), or 0 for NULL.
///
/// # Safety
/// `grid` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pp_grid_layers(grid: *const PpGrid) -> usize {
    unsafe { grid.as_ref() }.map_or(0, |g| g.0.layers())
}

/// # Safety
/// `grid` is a live handle; `rep` is NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pp_grid_get(grid: *const PpGrid, layer: usize, rep: *const c_char, out: *mut f64) -> PpStatus {
    guard(|| unsafe {
        let grid = &grid.as_ref().ok_or_else(|| null("grid"))?.0;
        let rep: RepType = parse(string(rep, "rep")?)?;
        let v = grid
            .get(layer, rep)
            .ok_or_else(|| Failure(PpStatus::NotFound, format!("no cell for layer {layer} {rep}")))?;
        write_out(out, v, "out")?;
        Ok(PpStatus::Ok)
    })
}

/// # Safety
/// `grid` is NULL or a handle from [`pp_compare_dumps`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pp_grid_free(grid: *mut PpGrid) {
    if !grid.is_null() {
        // SAFETY: the handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// The seeded toy encoder.
pub struct PpEncoder(ToyEncoder);

/// Feed-forward width is four times `dim`; positions are enabled.
///
/// # Safety
/// `out` is writable. On success `*out` must later be released with
/// [`pp_encoder_free`].
#[no_mangle]
pub unsafe extern "C" fn pp_encoder_new(
    dim: usize,
    layers: usize,
    heads: usize,
    seed: u64,
    out: *mut *mut PpEncoder,
) -> PpStatus {
    guard(|| unsafe {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = EncoderConfig {
            dim,
            layers,
            heads,
            seed,
            ..EncoderConfig::default()
        };
        let enc = ToyEncoder::new(config)?;
        write_out(out, Box::into_raw(Box::new(PpEncoder(enc))), "out")?;
        Ok(PpStatus::Ok)
    })
}

/// # Safety
/// `encoder` is NULL or a handle from [`pp_encoder_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pp_encoder_free(encoder: *mut PpEncoder) {
    if !encoder.is_null() {
        // SAFETY: the handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(encoder) });
    }
}

/// Encodes a phrase on its own and writes representation `rep` at `layer`
/// into `out`, which must hold at least `dim` doubles.
///
/// # Safety
/// `encoder` is a live handle; `phrase` and `rep` are NUL-terminated; `out`
/// points to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pp_encoder_encode_phrase(
    encoder: *const PpEncoder,
    phrase: *const c_char,
    layer: usize,
    rep: *const c_char,
    out: *mut f64,
    out_len: usize,
) -> PpStatus {
    guard(|| unsafe {
        let enc = &encoder.as_ref().ok_or_else(|| null("encoder"))?.0;
        let words = tokenize(string(phrase, "phrase")?);
        let rep: RepType = parse(string(rep, "rep")?)?;
        if words.is_empty() {
            return Err(Error::EmptyPhrase.into());
        }
        let tm = enc.encode(&words, &InputMode::PhraseOnly)?;
        let m = tm
            .layers
            .get(layer)
            .ok_or_else(|| Failure(PpStatus::Input, format!("layer {layer} beyond {}", tm.layers.len() - 1)))?;
        let v = extract_rep(m, &tm.span, rep, ExtractOptions::default())?;
        copy_into(&v, out, out_len)
    })
}
