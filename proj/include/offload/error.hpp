#pragma once

#include <stdexcept>
#include <string>

namespace offload {

/// Malformed input file or document.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structural problem with a call graph or decision graph.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the ACO solver and path enumeration when preconditions fail.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trace does not match the decision graph.
class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RpcError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace offload
