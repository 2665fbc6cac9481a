//! C ABI over span marking, sentence splitting, QA metrics and the cost
//! model.
//!
//! Every fallible call returns a [`CrosslateStatus`] and writes results
//! through out-pointers. Strings handed out are owned by the caller and
//! released with [`crosslate_string_free`]; handles have their own `_free`.
//! After a non-OK status, [`crosslate_last_error`] describes it.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, size_t};

use crosslate::costmodel::{self, PricingModel, ThroughputProfile};
use crosslate::metrics::{self, Normalizer};
use crosslate::segment::{split_sentences, Segmentation};
use crosslate::spanmark::{self, DelimiterPair};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrosslateStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    /// Delimiters missing, repeated or out of order in translated text.
    RecoverFailed = 4,
    OutOfRange = 5,
    Panic = 6,
}

pub struct CrosslateDelimiters(DelimiterPair);

pub struct CrosslatePricing(PricingModel);

pub struct CrosslateSegments(Segmentation);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Fail(CrosslateStatus, String);

impl Fail {
    fn arg(msg: impl ToString) -> Self {
        Fail(CrosslateStatus::InvalidArgument, msg.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CrosslateStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CrosslateStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside crosslate");
            CrosslateStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(CrosslateStatus::NullPointer, format!("{name} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CrosslateStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(CrosslateStatus::NullPointer, format!("{name} is NULL")))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(CrosslateStatus::NullPointer, format!("{name} is NULL")));
    }
    out.write(value);
    Ok(())
}

fn c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail::arg("result contains a NUL byte"))
}

/// Message for the last non-OK status on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn crosslate_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` is NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crosslate_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `<answer_start>` / `<answer_end>`. Never NULL.
#[no_mangle]
pub extern "C" fn crosslate_delimiters_default() -> *mut CrosslateDelimiters {
    Box::into_raw(Box::new(CrosslateDelimiters(DelimiterPair::default())))
}

/// # Safety
/// `start` and `end` are NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn crosslate_delimiters_new(
    start: *const c_char,
    end: *const c_char,
    out: *mut *mut CrosslateDelimiters,
) -> CrosslateStatus {
    guard(|| {
        let pair = DelimiterPair::new(text(start, "start")?, text(end, "end")?).map_err(Fail::arg)?;
        put(out, Box::into_raw(Box::new(CrosslateDelimiters(pair))), "out")
    })
}

/// # Safety
/// `d` is NULL or a handle from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crosslate_delimiters_free(d: *mut CrosslateDelimiters) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Wraps the answer starting at character `answer_start` of `context` in
/// the delimiters.
///
/// # Safety
/// Pointers are valid; strings are NUL-terminated; `out_marked` is writable.
#[no_mangle]
pub unsafe extern "C" fn crosslate_mark(
    delimiters: *const CrosslateDelimiters,
    context: *const c_char,
    answer_start: size_t,
    answer: *const c_char,
    out_marked: *mut *mut c_char,
) -> CrosslateStatus {
    guard(|| {
        let d = handle(delimiters, "delimiters")?;
        let marked = spanmark::mark(text(context, "context")?, answer_start, text(answer, "answer")?, &d.0)
            .map_err(Fail::arg)?;
        put(out_marked, c_string(marked.into_text())?, "out_marked")
    })
}

/// Strips the delimiters from translated text and reports the answer and
/// its character offset.
///
/// # Safety
/// Pointers are valid; `translated` is NUL-terminated; outs are writable.
#[no_mangle]
pub unsafe extern "C" fn crosslate_recover(
    delimiters: *const CrosslateDelimiters,
    translated: *const c_char,
    out_context: *mut *mut c_char,
    out_answer: *mut *mut c_char,
    out_answer_start: *mut size_t,
) -> CrosslateStatus {
    guard(|| {
        let d = handle(delimiters, "delimiters")?;
        if out_context.is_null() || out_answer.is_null() || out_answer_start.is_null() {
            return Err(Fail(CrosslateStatus::NullPointer, "output pointer is NULL".into()));
        }
        let r = spanmark::recover(text(translated, "translated")?, &d.0)
            .map_err(|e| Fail(CrosslateStatus::RecoverFailed, e.to_string()))?;
        let context = c_string(r.context)?;
        let answer = match c_string(r.answer_text) {
            Ok(a) => a,
            Err(e) => {
                crosslate_string_free(context);
                return Err(e);
            }
        };
        out_context.write(context);
        out_answer.write(answer);
        out_answer_start.write(r.answer_start);
        Ok(())
    })
}

/// Splits `text` into sentences with the built-in abbreviation list.
///
/// # Safety
/// `text` is NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn crosslate_split_sentences(
    input: *const c_char,
    out: *mut *mut CrosslateSegments,
) -> CrosslateStatus {
    guard(|| {
        let s = split_sentences(text(input, "input")?);
        put(out, Box::into_raw(Box::new(CrosslateSegments(s))), "out")
    })
}

/// # Safety
/// `segments` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn crosslate_segments_len(segments: *const CrosslateSegments) -> size_t {
    segments.as_ref().map_or(0, |s| s.0.len())
}

/// Segment `index`: its byte offset in the input and a copy of its text.
///
/// # Safety
/// `segments` is a live handle; outs are writable.
#[no_mangle]
pub unsafe extern "C" fn crosslate_segments_get(
    segments: *const CrosslateSegments,
    index: size_t,
    out_byte_start: *mut size_t,
    out_text: *mut *mut c_char,
) -> CrosslateStatus {
    guard(|| {
        let s = handle(segments, "segments")?;
        let seg = s
            .0
            .segments()
            .get(index)
            .ok_or_else(|| Fail(CrosslateStatus::OutOfRange, format!("segment {index} of {}", s.0.len())))?;
        put(out_byte_start, seg.start, "out_byte_start")?;
        put(out_text, c_string(seg.text.clone())?, "out_text")
    })
}

/// # Safety
/// `segments` is NULL or a handle from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crosslate_segments_free(segments: *mut CrosslateSegments) {
    if !segments.is_null() {
        drop(Box::from_raw(segments));
    }
}

unsafe fn qa_metric(
    prediction: *const c_char,
    gold: *const c_char,
    language: *const c_char,
    out: *mut f64,
    f: fn(&str, &[&str], &Normalizer) -> f64,
) -> CrosslateStatus {
    guard(|| {
        let norm = if language.is_null() {
            Normalizer::english()
        } else {
            Normalizer::for_language(text(language, "language")?)
        };
        let score = f(text(prediction, "prediction")?, &[text(gold, "gold")?], &norm);
        put(out, score, "out")
    })
}

/// Token F1 after normalization for `language` ("en", "pt"; NULL = "en").
///
/// # Safety
/// Strings are NUL-terminated or `language` is NULL; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn crosslate_token_f1(
    prediction: *const c_char,
    gold: *const c_char,
    language: *const c_char,
    out: *mut f64,
) -> CrosslateStatus {
    qa_metric(prediction, gold, language, out, metrics::token_f1)
}

/// Exact match (0 or 1) after normalization for `language`.
///
/// # Safety
/// As [`crosslate_token_f1`].
#[no_mangle]
pub unsafe extern "C" fn crosslate_exact_match(
    prediction: *const c_char,
    gold: *const c_char,
    language: *const c_char,
    out: *mut f64,
) -> CrosslateStatus {
    qa_metric(prediction, gold, language, out, metrics::exact_match)
}

/// Bundled profile name (`paper-2021`) or JSON file path.
///
/// # Safety
/// `name_or_path` is NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn crosslate_pricing_load(
    name_or_path: *const c_char,
    out: *mut *mut CrosslatePricing,
) -> CrosslateStatus {
    guard(|| {
        let model = PricingModel::load(text(name_or_path, "name_or_path")?).map_err(Fail::arg)?;
        put(out, Box::into_raw(Box::new(CrosslatePricing(model))), "out")
    })
}

/// # Safety
/// `commercial` has `n_commercial` doubles and `gpu` has `n_gpu`; `out` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn crosslate_pricing_new(
    commercial_per_million: *const f64,
    n_commercial: size_t,
    gpu_per_hour: *const f64,
    n_gpu: size_t,
    out: *mut *mut CrosslatePricing,
) -> CrosslateStatus {
    guard(|| {
        if commercial_per_million.is_null() || gpu_per_hour.is_null() {
            return Err(Fail(CrosslateStatus::NullPointer, "rate array is NULL".into()));
        }
        let comm = std::slice::from_raw_parts(commercial_per_million, n_commercial).to_vec();
        let gpu = std::slice::from_raw_parts(gpu_per_hour, n_gpu).to_vec();
        let model = PricingModel::new(comm, gpu).map_err(Fail::arg)?;
        put(out, Box::into_raw(Box::new(CrosslatePricing(model))), "out")
    })
}

/// # Safety
/// `p` is NULL or a handle from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crosslate_pricing_free(p: *mut CrosslatePricing) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// USD to translate `chars` characters commercially.
///
/// # Safety
/// `pricing` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn crosslate_one_time_commercial(
    pricing: *const CrosslatePricing,
    chars: u64,
    out: *mut f64,
) -> CrosslateStatus {
    guard(|| put(out, costmodel::one_time_commercial(chars, &handle(pricing, "pricing")?.0), "out"))
}

/// USD for `wall_hours` GPU hours.
///
/// # Safety
/// `pricing` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn crosslate_one_time_opensource(
    pricing: *const CrosslatePricing,
    wall_hours: f64,
    out: *mut f64,
) -> CrosslateStatus {
    guard(|| {
        if !(wall_hours >= 0.0) {
            return Err(Fail::arg("wall_hours must be non-negative"));
        }
        put(out, costmodel::one_time_opensource(wall_hours, &handle(pricing, "pricing")?.0), "out")
    })
}

/// Commercial USD per `n` examples of `avg_chars` characters.
///
/// # Safety
/// `pricing` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn crosslate_recurring_commercial(
    pricing: *const CrosslatePricing,
    avg_chars: f64,
    n: f64,
    out: *mut f64,
) -> CrosslateStatus {
    guard(|| put(out, costmodel::recurring_commercial(avg_chars, &handle(pricing, "pricing")?.0, n), "out"))
}

/// GPU USD per `n` examples at `seconds_per_batch` per batch of
/// `batch_size`.
///
/// # Safety
/// `pricing` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn crosslate_recurring_opensource(
    pricing: *const CrosslatePricing,
    seconds_per_batch: f64,
    batch_size: size_t,
    n: f64,
    out: *mut f64,
) -> CrosslateStatus {
    guard(|| {
        let tp = ThroughputProfile::new(seconds_per_batch, batch_size).map_err(Fail::arg)?;
        put(out, costmodel::recurring_opensource(&tp, &handle(pricing, "pricing")?.0, n), "out")
    })
}
