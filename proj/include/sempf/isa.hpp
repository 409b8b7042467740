#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sempf {

using Addr = std::uint64_t;
using Cycle = std::uint64_t;

// Register universe: r0..r15 architectural, t0..t7 temporaries reserved for
// injected slices, and a single flags register written by ALU ops.
inline constexpr int kNumArchRegs = 16;
inline constexpr int kNumTempRegs = 8;
inline constexpr int kNumRegs = kNumArchRegs + kNumTempRegs + 1;

struct Reg {
  static constexpr std::uint8_t kNone = 0xFF;
  std::uint8_t id = kNone;

  static constexpr Reg arch(int i) { return Reg{static_cast<std::uint8_t>(i)}; }
  static constexpr Reg temp(int i) { return Reg{static_cast<std::uint8_t>(kNumArchRegs + i)}; }
  static constexpr Reg flags() { return Reg{static_cast<std::uint8_t>(kNumRegs - 1)}; }
  static constexpr Reg none() { return Reg{}; }

  constexpr bool valid() const { return id < kNumRegs; }
  constexpr bool is_arch() const { return id < kNumArchRegs; }
  constexpr bool is_temp() const { return id >= kNumArchRegs && id < kNumArchRegs + kNumTempRegs; }
  constexpr bool is_flags() const { return id == kNumRegs - 1; }

  constexpr auto operator<=>(const Reg&) const = default;
};

std::string to_string(Reg r);
std::optional<Reg> parse_reg(std::string_view name);

// 25-bit register set (the walker's source bitmap).
class RegSet {
 public:
  constexpr void set(Reg r) { if (r.valid()) bits_ |= (1u << r.id); }
  constexpr void clear(Reg r) { if (r.valid()) bits_ &= ~(1u << r.id); }
  constexpr bool test(Reg r) const { return r.valid() && (bits_ >> r.id) & 1u; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint32_t bits() const { return bits_; }
  constexpr bool operator==(const RegSet&) const = default;

 private:
  std::uint32_t bits_ = 0;
};

enum class OpKind : std::uint8_t {
  MOV_IMM, MOV, ADD, SUB, MUL, AND, OR, XOR, SHL, SHR, LOAD, STORE, BR, JMP, HALT
};

std::string_view to_string(OpKind k);
std::optional<OpKind> parse_op_kind(std::string_view name);

constexpr bool is_alu(OpKind k) { return k >= OpKind::ADD && k <= OpKind::SHR; }
constexpr bool is_mem(OpKind k) { return k == OpKind::LOAD || k == OpKind::STORE; }
constexpr bool writes_dest(OpKind k) {
  return k == OpKind::MOV_IMM || k == OpKind::MOV || is_alu(k) || k == OpKind::LOAD;
}

enum class Cond : std::uint8_t { eq, ne, lt, ge };

std::string_view to_string(Cond c);
std::optional<Cond> parse_cond(std::string_view name);

struct Operand {
  enum class Kind : std::uint8_t { none, reg, imm };
  Kind kind = Kind::none;
  Reg reg;
  std::int64_t imm = 0;

  static Operand of(Reg r) { return Operand{Kind::reg, r, 0}; }
  static Operand immediate(std::int64_t v) { return Operand{Kind::imm, Reg::none(), v}; }

  bool is_reg() const { return kind == Kind::reg; }
  bool is_imm() const { return kind == Kind::imm; }
  bool operator==(const Operand&) const = default;
};

// base + index*scale + disp
struct MemRef {
  Reg base;
  Reg index;
  std::uint8_t scale = 1;
  std::int64_t disp = 0;
  bool operator==(const MemRef&) const = default;
};

// LOAD: dest <- [mem]. STORE: [mem] <- src1. BR: if (src1 cond src2) goto target.
// ALU: dest <- src1 op src2 (src1 register, src2 register or immediate).
struct MicroOp {
  Addr ip = 0;
  OpKind kind = OpKind::HALT;
  Reg dest;
  Operand src1;
  Operand src2;
  MemRef mem;
  Cond cond = Cond::eq;
  Addr target = 0;

  bool operator==(const MicroOp&) const = default;

  // Registers read by the op, including address registers.
  RegSet sources() const;
  bool reads_flags() const { return sources().test(Reg::flags()); }
};

namespace op {
MicroOp mov_imm(Addr ip, Reg d, std::int64_t v);
MicroOp mov(Addr ip, Reg d, Reg s);
MicroOp alu(Addr ip, OpKind k, Reg d, Reg a, Operand b);
MicroOp load(Addr ip, Reg d, MemRef m);
MicroOp store(Addr ip, Operand data, MemRef m);
MicroOp br(Addr ip, Cond c, Reg a, Operand b, Addr target);
MicroOp jmp(Addr ip, Addr target);
MicroOp halt(Addr ip);
}  // namespace op

MemRef mem(Reg base, std::int64_t disp = 0);
MemRef mem(Reg base, Reg index, std::uint8_t scale, std::int64_t disp = 0);

class SimulationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sparse byte-addressable memory, 4 KiB pages. Unwritten bytes read as zero.
class Memory {
 public:
  static constexpr Addr kPageBits = 12;
  static constexpr Addr kPageSize = Addr{1} << kPageBits;

  std::uint64_t read64(Addr addr) const;
  void write64(Addr addr, std::uint64_t value);
  std::uint8_t read8(Addr addr) const;
  void write8(Addr addr, std::uint8_t value);

  std::size_t page_count() const { return pages_.size(); }

  // Content equality; a missing page equals an all-zero page.
  bool operator==(const Memory& other) const;

 private:
  using Page = std::array<std::uint8_t, kPageSize>;
  const Page* find(Addr page) const;
  Page& touch(Addr page);

  std::unordered_map<Addr, Page> pages_;
};

struct ArchState {
  std::array<std::uint64_t, kNumRegs> regs{};
  Memory mem;
  Addr ip = 0;
  std::uint64_t retired = 0;
  Cycle cycle = 0;
  bool halted = false;

  std::uint64_t& reg(Reg r) { return regs.at(r.id); }
  std::uint64_t reg(Reg r) const { return regs.at(r.id); }

  // Equality over architectural content: r0..r15, f, memory, ip, halted.
  bool arch_equal(const ArchState& other) const;
};

struct RetiredEvent {
  MicroOp op;
  std::optional<std::uint64_t> result;
  std::optional<Addr> eff_addr;
  std::optional<bool> taken;
  std::optional<std::uint64_t> stored;  // STORE data value
  std::uint64_t retire_index = 0;
};

class Program {
 public:
  Program() = default;
  explicit Program(std::vector<MicroOp> ops);

  const MicroOp* fetch(Addr ip) const;
  // Op following `ip` in program order, or nullptr.
  const MicroOp* next(Addr ip) const;
  Addr entry() const { return ops_.empty() ? 0 : ops_.front().ip; }

  const std::vector<MicroOp>& ops() const { return ops_; }
  std::size_t size() const { return ops_.size(); }

 private:
  std::vector<MicroOp> ops_;
  std::unordered_map<Addr, std::size_t> index_;
};

// Throws SimulationFault on ops that name temporaries, write flags explicitly,
// or carry malformed operands.
void validate(const Program& program);

Addr effective_address(const MicroOp& op, const ArchState& state);
std::uint64_t flags_of(std::uint64_t result);
std::uint64_t alu_eval(OpKind k, std::uint64_t a, std::uint64_t b);
bool cond_eval(Cond c, std::uint64_t a, std::uint64_t b);

RetiredEvent step(ArchState& state, const Program& program);

}  // namespace sempf
