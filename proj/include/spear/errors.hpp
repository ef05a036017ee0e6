#pragma once

#include <stdexcept>
#include <string>

namespace spear {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public Error {
 public:
  NonConvergence(int sweeps, double residual)
      : Error("value iteration did not converge after " + std::to_string(sweeps) +
              " sweeps (residual " + std::to_string(residual) + ")"),
        sweeps_(sweeps), residual_(residual) {}
  int sweeps() const { return sweeps_; }
  double residual() const { return residual_; }

 private:
  int sweeps_;
  double residual_;
};

class GenerationFailure : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(int line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + " [" + field + "]: " + what),
        line_(line), field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

class CombinatorialLimit : public Error {
 public:
  using Error::Error;
};

class SizeLimit : public Error {
 public:
  using Error::Error;
};

class NoKnownExit : public Error {
 public:
  NoKnownExit() : Error("agent belief requires at least one observed exit") {}
};

class NoSolution : public Error {
 public:
  explicit NoSolution(int loop)
      : Error("no predicate set covers the divergent states (outer loop " +
              std::to_string(loop) + ")"),
        loop_(loop) {}
  int loop() const { return loop_; }

 private:
  int loop_;
};

class LoopLimitExceeded : public Error {
 public:
  explicit LoopLimitExceeded(int loops)
      : Error("case-3 re-penalization did not settle within " + std::to_string(loops) +
              " outer loops"),
        loops_(loops) {}
  int loops() const { return loops_; }

 private:
  int loops_;
};

}  // namespace spear
