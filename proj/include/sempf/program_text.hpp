#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sempf/isa.hpp"

namespace sempf {

// Text form of a program plus its initial memory image. Grammar in docs/isa.md.
struct ProgramImage {
  std::vector<MicroOp> ops;
  std::vector<std::pair<Addr, std::uint64_t>> memory;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

ProgramImage parse_program_text(std::string_view text);

std::string format_op(const MicroOp& op);
std::string format_mem(const MemRef& m);
std::string format_program(const ProgramImage& image);

std::string hex(std::uint64_t v);

}  // namespace sempf
