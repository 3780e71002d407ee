#include "hls/diag.hpp"

#include <sstream>

namespace hls {

std::string format_diagnostic(const std::string& file, const Diagnostic& d, bool color) {
  const char* sev = "error";
  const char* esc = "\033[31m";
  switch (d.severity) {
    case Severity::Note: sev = "note"; esc = "\033[36m"; break;
    case Severity::Warning: sev = "warning"; esc = "\033[33m"; break;
    case Severity::Error: break;
  }
  std::ostringstream os;
  os << file << ':' << d.loc.line << ':' << d.loc.col << ": ";
  if (color)
    os << esc << sev << "\033[0m";
  else
    os << sev;
  os << ": " << d.message;
  return os.str();
}

std::string DiagSink::format(bool color) const {
  std::string out;
  for (const auto& d : diags_) {
    out += format_diagnostic(file_, d, color);
    out += '\n';
  }
  return out;
}

namespace {

std::string first_error(const std::string& file, const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    if (d.severity == Severity::Error) return format_diagnostic(file, d);
  return file + ": compilation failed";
}

}  // namespace

CompileError::CompileError(std::string file, std::vector<Diagnostic> diags)
    : std::runtime_error(first_error(file, diags)), file_(std::move(file)), diags_(std::move(diags)) {}

void throw_if_errors(const DiagSink& sink) {
  if (sink.has_errors()) throw CompileError(sink.file(), sink.all());
}

void fail(const DiagSink& sink, SourceLoc loc, const std::string& msg) {
  auto diags = sink.all();
  diags.push_back({Severity::Error, loc, msg});
  throw CompileError(sink.file(), std::move(diags));
}

}  // namespace hls
