#include "qtraj/qtraj.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "qtraj/model.hpp"
#include "qtraj/oracle.hpp"

struct qt_model {
  qtraj::ModelFile file;
};

struct qt_result {
  std::vector<double> times;
  std::vector<std::vector<qtraj::Complex>> mean, standard_error;
  std::vector<double> basis_size;
};

namespace {

thread_local std::string last_error;

qt_status to_status(qtraj::ErrorCode code) {
  switch (code) {
    case qtraj::ErrorCode::InvalidArgument: return QT_ERR_INVALID_ARGUMENT;
    case qtraj::ErrorCode::StructureMismatch: return QT_ERR_STRUCTURE;
    case qtraj::ErrorCode::TypeMismatch: return QT_ERR_TYPE;
    case qtraj::ErrorCode::Parse: return QT_ERR_PARSE;
    case qtraj::ErrorCode::Numeric: return QT_ERR_NUMERIC;
    case qtraj::ErrorCode::Io: return QT_ERR_IO;
    case qtraj::ErrorCode::Validation: return QT_ERR_VALIDATION;
  }
  return QT_ERR_INTERNAL;
}

template <class F>
qt_status guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return QT_OK;
  } catch (const qtraj::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return QT_ERR_INTERNAL;
}

qt_status null_argument(const char* what) {
  last_error = std::string(what) + " must not be NULL";
  return QT_ERR_INVALID_ARGUMENT;
}

qtraj::LineCallback forward(qt_line_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const qtraj::SummaryLine& line) { fn(qtraj::format_summary(line).c_str(), user); };
}

qt_result* single_result(const qtraj::SingleRunResult& r) {
  auto* out = new qt_result;
  out->times = r.record.times;
  out->mean = r.record.means;
  for (std::size_t k = 0; k < r.record.times.size(); ++k) {
    out->standard_error.emplace_back(r.record.means[k].size());
    out->basis_size.push_back(static_cast<double>(r.record.basis_size[k]));
  }
  return out;
}

qt_result* ensemble_result(const qtraj::EnsembleResult& r) {
  auto* out = new qt_result;
  out->times = r.times;
  out->mean = r.mean;
  out->standard_error = r.standard_error;
  out->basis_size = r.mean_basis_size;
  return out;
}

}  // namespace

extern "C" {

const char* qt_version(void) { return "0.1.0"; }

const char* qt_status_string(qt_status status) {
  switch (status) {
    case QT_OK: return "ok";
    case QT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QT_ERR_STRUCTURE: return "structure mismatch";
    case QT_ERR_TYPE: return "type mismatch";
    case QT_ERR_PARSE: return "parse error";
    case QT_ERR_NUMERIC: return "numerical failure";
    case QT_ERR_IO: return "i/o error";
    case QT_ERR_VALIDATION: return "validation failure";
    case QT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* qt_last_error(void) { return last_error.c_str(); }

qt_status qt_model_parse(const char* text, size_t length, qt_model** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (!text && length) return null_argument("text");
  return guarded([&] { *out = new qt_model{qtraj::parse_model(std::string_view(text ? text : "", length))}; });
}

qt_status qt_model_load(const char* path, qt_model** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (!path) return null_argument("path");
  return guarded([&] { *out = new qt_model{qtraj::load_model(path)}; });
}

void qt_model_free(qt_model* model) { delete model; }

qt_status qt_model_print(const qt_model* model, char** out) {
  if (!model) return null_argument("model");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    const std::string text = qtraj::print_model(model->file);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

void qt_string_free(char* text) { delete[] text; }

qt_status qt_model_set(qt_model* model, const char* key, const char* value) {
  if (!model) return null_argument("model");
  if (!key || !value) return null_argument("key and value");
  return guarded([&] { qtraj::apply_run_setting(model->file, key, value); });
}

size_t qt_model_num_outputs(const qt_model* model) { return model ? model->file.outputs.size() : 0; }

qt_status qt_run(const qt_model* model, qt_run_mode mode, const char* out_dir, qt_line_fn on_line, void* user,
                 qt_result** out) {
  if (out) *out = nullptr;
  if (!model) return null_argument("model");
  if (mode != QT_RUN_SINGLE && mode != QT_RUN_ENSEMBLE) {
    last_error = "unknown run mode";
    return QT_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const qtraj::CompiledModel m = qtraj::compile_model(model->file);
    std::optional<std::filesystem::path> dir;
    if (out_dir && *out_dir) dir = std::filesystem::path(out_dir);
    if (mode == QT_RUN_SINGLE) {
      auto r = qtraj::run_single(m.initial, m.operators, m.run, m.outputs, dir, forward(on_line, user));
      if (out) *out = single_result(r);
    } else {
      auto r = qtraj::run_ensemble(m.initial, m.operators, m.run, m.outputs, dir, forward(on_line, user));
      if (out) *out = ensemble_result(r);
    }
  });
}

qt_status qt_oracle_check(const qt_model* model, double z, qt_line_fn on_report, void* user, int* passed,
                          qt_result** out) {
  if (out) *out = nullptr;
  if (!model) return null_argument("model");
  if (!passed) return null_argument("passed");
  *passed = 0;
  return guarded([&] {
    const qtraj::CompiledModel m = qtraj::compile_model(model->file);
    std::vector<std::string> names;
    for (const auto& o : model->file.outputs) names.push_back(qtraj::print_expr(*o.expr));
    const auto r = qtraj::oracle_check(m, names, z);
    if (on_report) {
      const std::string table = r.report.table();
      std::size_t start = 0;
      while (start < table.size()) {
        std::size_t end = table.find('\n', start);
        if (end == std::string::npos) end = table.size();
        on_report(table.substr(start, end - start).c_str(), user);
        start = end + 1;
      }
    }
    *passed = r.report.all_pass ? 1 : 0;
    if (out) *out = ensemble_result(r.ensemble);
  });
}

size_t qt_result_num_times(const qt_result* result) { return result ? result->times.size() : 0; }

size_t qt_result_num_outputs(const qt_result* result) {
  return result && !result->mean.empty() ? result->mean.front().size() : 0;
}

double qt_result_time(const qt_result* result, size_t k) {
  return result && k < result->times.size() ? result->times[k] : 0.0;
}

static qt_status read_entry(const qt_result* result, const std::vector<std::vector<qtraj::Complex>>* table, size_t k,
                            size_t i, double* re, double* im) {
  if (!result) return null_argument("result");
  if (k >= table->size() || i >= (*table)[k].size()) {
    last_error = "result index out of range";
    return QT_ERR_INVALID_ARGUMENT;
  }
  if (re) *re = (*table)[k][i].real();
  if (im) *im = (*table)[k][i].imag();
  return QT_OK;
}

qt_status qt_result_mean(const qt_result* result, size_t k, size_t i, double* re, double* im) {
  return read_entry(result, result ? &result->mean : nullptr, k, i, re, im);
}

qt_status qt_result_standard_error(const qt_result* result, size_t k, size_t i, double* re, double* im) {
  return read_entry(result, result ? &result->standard_error : nullptr, k, i, re, im);
}

double qt_result_basis_size(const qt_result* result, size_t k) {
  return result && k < result->basis_size.size() ? result->basis_size[k] : 0.0;
}

void qt_result_free(qt_result* result) { delete result; }

}  // extern "C"
