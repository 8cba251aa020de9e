// error.hpp - exception types shared across the warp toolchain.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace warp {

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AsmError : public std::runtime_error {
 public:
  AsmError(int line, int column, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class SimFault : public std::runtime_error {
 public:
  SimFault(std::uint32_t pc, const std::string& msg)
      : std::runtime_error("fault at pc 0x" + hex(pc) + ": " + msg), pc_(pc) {}
  std::uint32_t pc() const { return pc_; }

  static std::string hex(std::uint32_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(8, '0');
    for (int i = 7; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
    return s;
  }

 private:
  std::uint32_t pc_;
};

// Reasons a hot loop cannot be moved to the configurable logic.
enum class RejectReason {
  ContainsCall,
  IrregularAccess,
  UnboundedTrip,
  UnsupportedOp,
  NestedBackwardBranch,
  RegionTooLarge,
};

const char* to_string(RejectReason r);
// Inverse of to_string; nullopt for an unknown name.
std::optional<RejectReason> parse_reject_reason(const std::string& s);

class PartitionError : public std::runtime_error {
 public:
  PartitionError(RejectReason reason, const std::string& detail)
      : std::runtime_error(std::string(to_string(reason)) + ": " + detail), reason_(reason), detail_(detail) {}
  RejectReason reason() const { return reason_; }
  const std::string& detail() const { return detail_; }

 private:
  RejectReason reason_;
  std::string detail_;
};

class CadError : public std::runtime_error {
 public:
  enum class Kind { CapacityExceeded, Unroutable, Io };
  CadError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace warp
