//! C ABI over the `arcorpus` library.
//!
//! Every fallible function returns an [`ArcStatus`]; on failure the message is
//! available from [`arc_last_error`] on the same thread. Strings and id
//! buffers handed out by this library must be released with
//! [`arc_string_free`] and [`arc_ids_free`]; handles with their `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use arcorpus::filter::{filter_document, DedupIndex, FilterConfig, RawDocument};
use arcorpus::tokenizer::{train_from_texts, BbpeVocab};
use arcorpus::{metrics, normalize, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    UnknownToken = 6,
    ZeroVariance = 7,
    LengthMismatch = 8,
    Panic = 99,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> ArcStatus {
    match e {
        Error::Io { .. } | Error::DocIo { .. } => ArcStatus::Io,
        Error::Parse { .. } | Error::MalformedVocab(_) => ArcStatus::Parse,
        Error::UnknownTokenId(_) => ArcStatus::UnknownToken,
        Error::ZeroVariance => ArcStatus::ZeroVariance,
        Error::LengthMismatch { .. } => ArcStatus::LengthMismatch,
        _ => ArcStatus::InvalidArgument,
    }
}

struct Fail(ArcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ArcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ArcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ArcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(ArcStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(ArcStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn check_out<T>(p: *mut T, name: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail(ArcStatus::NullPointer, format!("{name} is null")));
    }
    Ok(())
}

fn to_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(ArcStatus::InvalidArgument, "output contains a NUL byte".into()))
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn arc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn arc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `ids` and `len` must be exactly as returned by [`arc_vocab_encode`].
#[no_mangle]
pub unsafe extern "C" fn arc_ids_free(ids: *mut u32, len: usize) {
    if !ids.is_null() {
        drop(Vec::from_raw_parts(ids, len, len));
    }
}

/// Normalized copy of `text`; free with [`arc_string_free`].
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn arc_normalize(text: *const c_char, out: *mut *mut c_char) -> ArcStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        check_out(out, "out")?;
        *out = to_c_string(normalize::normalize_text(text))?;
        Ok(())
    })
}

/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn arc_arabic_ratio(text: *const c_char, out: *mut f64) -> ArcStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        check_out(out, "out")?;
        *out = normalize::arabic_ratio(text);
        Ok(())
    })
}

/// Opaque byte-level BPE vocabulary.
pub struct ArcVocab {
    inner: BbpeVocab,
}

/// Loads `merges.txt` and `vocab.json` from `dir`.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn arc_vocab_load(dir: *const c_char, out: *mut *mut ArcVocab) -> ArcStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        check_out(out, "out")?;
        let inner = BbpeVocab::load(Path::new(dir))?;
        *out = Box::into_raw(Box::new(ArcVocab { inner }));
        Ok(())
    })
}

/// Trains a vocabulary of at most `target_size` entries on `n` texts.
///
/// # Safety
/// `texts` must point to `n` NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn arc_vocab_train(
    texts: *const *const c_char,
    n: usize,
    target_size: usize,
    out: *mut *mut ArcVocab,
) -> ArcStatus {
    guard(|| {
        check_out(out, "out")?;
        if texts.is_null() && n > 0 {
            return Err(Fail(ArcStatus::NullPointer, "texts is null".into()));
        }
        let mut owned = Vec::with_capacity(n);
        for i in 0..n {
            owned.push(str_arg(*texts.add(i), "texts[i]")?);
        }
        let inner = train_from_texts(owned, target_size)?;
        *out = Box::into_raw(Box::new(ArcVocab { inner }));
        Ok(())
    })
}

/// # Safety
/// `vocab` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn arc_vocab_save(vocab: *const ArcVocab, dir: *const c_char) -> ArcStatus {
    guard(|| {
        let v = vocab.as_ref().ok_or(Fail(ArcStatus::NullPointer, "vocab is null".into()))?;
        let dir = str_arg(dir, "dir")?;
        v.inner.save(Path::new(dir))?;
        Ok(())
    })
}

/// Number of ids in use, special tokens included. 0 for NULL.
///
/// # Safety
/// `vocab` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn arc_vocab_size(vocab: *const ArcVocab) -> usize {
    vocab.as_ref().map_or(0, |v| v.inner.len())
}

/// Encodes `text`; free the ids with [`arc_ids_free`].
///
/// # Safety
/// `vocab` must be a live handle, `text` NUL-terminated, outputs writable.
#[no_mangle]
pub unsafe extern "C" fn arc_vocab_encode(
    vocab: *const ArcVocab,
    text: *const c_char,
    ids: *mut *mut u32,
    len: *mut usize,
) -> ArcStatus {
    guard(|| {
        let v = vocab.as_ref().ok_or(Fail(ArcStatus::NullPointer, "vocab is null".into()))?;
        let text = str_arg(text, "text")?;
        check_out(ids, "ids")?;
        check_out(len, "len")?;
        let mut encoded = v.inner.encode_ids(text);
        encoded.shrink_to_fit();
        let mut encoded = std::mem::ManuallyDrop::new(encoded.into_boxed_slice());
        *len = encoded.len();
        *ids = encoded.as_mut_ptr();
        Ok(())
    })
}

/// Decodes `len` ids into text; invalid UTF-8 becomes U+FFFD. Free the result
/// with [`arc_string_free`].
///
/// # Safety
/// `vocab` must be a live handle, `ids` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn arc_vocab_decode(
    vocab: *const ArcVocab,
    ids: *const u32,
    len: usize,
    out: *mut *mut c_char,
) -> ArcStatus {
    guard(|| {
        let v = vocab.as_ref().ok_or(Fail(ArcStatus::NullPointer, "vocab is null".into()))?;
        check_out(out, "out")?;
        let ids = if len == 0 {
            &[][..]
        } else if ids.is_null() {
            return Err(Fail(ArcStatus::NullPointer, "ids is null".into()));
        } else {
            std::slice::from_raw_parts(ids, len)
        };
        *out = to_c_string(v.inner.decode(ids)?)?;
        Ok(())
    })
}

/// # Safety
/// `vocab` must come from this library or be NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn arc_vocab_free(vocab: *mut ArcVocab) {
    if !vocab.is_null() {
        drop(Box::from_raw(vocab));
    }
}

/// Opaque streaming filter. Documents are deduplicated against every
/// sentence kept earlier by the same handle.
pub struct ArcFilter {
    config: FilterConfig,
    dedup: DedupIndex,
    next_order: u64,
}

/// A filter with default thresholds.
#[no_mangle]
pub extern "C" fn arc_filter_new() -> *mut ArcFilter {
    Box::into_raw(Box::new(ArcFilter {
        config: FilterConfig::default(),
        dedup: DedupIndex::new(),
        next_order: 0,
    }))
}

/// Filters one document. `*kept` is set to 1 and `*out` to the cleaned text
/// (sentences joined by newlines) when the document survives, otherwise to 0
/// and NULL.
///
/// # Safety
/// `filter` must be a live handle, `text` NUL-terminated, outputs writable.
#[no_mangle]
pub unsafe extern "C" fn arc_filter_document(
    filter: *mut ArcFilter,
    text: *const c_char,
    kept: *mut i32,
    out: *mut *mut c_char,
) -> ArcStatus {
    guard(|| {
        let f = filter.as_mut().ok_or(Fail(ArcStatus::NullPointer, "filter is null".into()))?;
        let text = str_arg(text, "text")?;
        check_out(kept, "kept")?;
        check_out(out, "out")?;
        let doc = RawDocument {
            doc_id: format!("doc-{}", f.next_order),
            source: "ffi".into(),
            text: text.to_owned(),
            ingest_order: f.next_order,
        };
        f.next_order += 1;
        match filter_document(doc, &mut f.dedup, &f.config).clean {
            Some(clean) => {
                *out = to_c_string(clean.text())?;
                *kept = 1;
            }
            None => {
                *out = ptr::null_mut();
                *kept = 0;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `filter` must come from [`arc_filter_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn arc_filter_free(filter: *mut ArcFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}

/// Pearson correlation of two length-`n` arrays.
///
/// # Safety
/// `xs` and `ys` must each hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn arc_pearson(xs: *const f64, ys: *const f64, n: usize, out: *mut f64) -> ArcStatus {
    guard(|| {
        if xs.is_null() || ys.is_null() {
            return Err(Fail(ArcStatus::NullPointer, "input array is null".into()));
        }
        check_out(out, "out")?;
        let xs = std::slice::from_raw_parts(xs, n);
        let ys = std::slice::from_raw_parts(ys, n);
        *out = metrics::pearson(xs, ys)?;
        Ok(())
    })
}
