#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hls {

struct SourceLoc {
  int line = 0;
  int col = 0;
};

enum class Severity { Note, Warning, Error };

struct Diagnostic {
  Severity severity = Severity::Error;
  SourceLoc loc;
  std::string message;
};

/// Collects diagnostics for one compilation unit.
class DiagSink {
 public:
  explicit DiagSink(std::string file = "<input>") : file_(std::move(file)) {}

  void error(SourceLoc loc, std::string msg) { add(Severity::Error, loc, std::move(msg)); }
  void warning(SourceLoc loc, std::string msg) { add(Severity::Warning, loc, std::move(msg)); }
  void note(SourceLoc loc, std::string msg) { add(Severity::Note, loc, std::move(msg)); }
  void add(Severity sev, SourceLoc loc, std::string msg) {
    diags_.push_back({sev, loc, std::move(msg)});
    if (sev == Severity::Error) ++errors_;
  }

  bool has_errors() const { return errors_ > 0; }
  int error_count() const { return errors_; }
  const std::vector<Diagnostic>& all() const { return diags_; }
  const std::string& file() const { return file_; }

  /// `file:line:col: severity: message`, one per line.
  std::string format(bool color = false) const;

 private:
  std::string file_;
  std::vector<Diagnostic> diags_;
  int errors_ = 0;
};

std::string format_diagnostic(const std::string& file, const Diagnostic& d, bool color = false);

/// Thrown when a stage cannot continue. Carries every diagnostic collected so far.
class CompileError : public std::runtime_error {
 public:
  CompileError(std::string file, std::vector<Diagnostic> diags);
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }
  const std::string& file() const { return file_; }

 private:
  std::string file_;
  std::vector<Diagnostic> diags_;
};

/// Throws CompileError if the sink holds errors.
void throw_if_errors(const DiagSink& sink);
[[noreturn]] void fail(const DiagSink& sink, SourceLoc loc, const std::string& msg);

/// Invariant violation inside the compiler itself.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hls
