#include "sempf/workloads.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "sempf/memsys.hpp"

namespace sempf {

std::string_view to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::stride: return "stride";
    case WorkloadKind::indirect: return "indirect";
    case WorkloadKind::linked_list: return "linked_list";
    case WorkloadKind::bfs_csr: return "bfs_csr";
    case WorkloadKind::double_deref_fig6: return "double_deref_fig6";
    case WorkloadKind::nested_two_phase: return "nested_two_phase";
    case WorkloadKind::file: return "file";
  }
  return "?";
}

std::optional<WorkloadKind> parse_workload_kind(std::string_view s) {
  for (auto k : {WorkloadKind::stride, WorkloadKind::indirect, WorkloadKind::linked_list, WorkloadKind::bfs_csr,
                 WorkloadKind::double_deref_fig6, WorkloadKind::nested_two_phase, WorkloadKind::file})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::optional<Addr> Oracle::future_address(std::size_t i, int lookahead) const {
  if (!has_stream || !single_context) return std::nullopt;
  const std::size_t j = i + static_cast<std::size_t>(lookahead_scaled ? lookahead : 1);
  if (j >= stream.size()) return std::nullopt;
  return stream[j];
}

OracleVerdict oracle_check(const Oracle& oracle, Addr prefetch_addr, Addr load_ip, std::size_t instance,
                           int lookahead) {
  if (!oracle.has_stream || load_ip != oracle.critical_ip) return OracleVerdict::not_applicable;
  const auto want = oracle.future_address(instance, lookahead);
  if (!want) return OracleVerdict::not_applicable;
  return *want == prefetch_addr ? OracleVerdict::match : OracleVerdict::mismatch;
}

namespace {

constexpr Addr kCodeBase = 0x400000;
constexpr Addr kIpStep = 4;

Reg r(int i) { return Reg::arch(i); }
Operand R(int i) { return Operand::of(Reg::arch(i)); }
Operand I(std::int64_t v) { return Operand::immediate(v); }
std::int64_t S(Addr a) { return static_cast<std::int64_t>(a); }

// Straight-line assembler with forward labels.
class Asm {
 public:
  explicit Asm(Addr base = kCodeBase) : ip_(base) {}

  Addr here() const { return ip_; }
  void label(const std::string& name) { labels_[name] = ip_; }

  Addr emit(MicroOp m) {
    m.ip = ip_;
    ops_.push_back(m);
    ip_ += kIpStep;
    return m.ip;
  }
  Addr mov_imm(int d, std::int64_t v) { return emit(op::mov_imm(0, r(d), v)); }
  Addr alu(OpKind k, int d, int a, Operand b) { return emit(op::alu(0, k, r(d), r(a), b)); }
  Addr load(int d, MemRef m) { return emit(op::load(0, r(d), m)); }
  Addr br(Cond c, int a, Operand b, const std::string& target) {
    fixups_.emplace_back(ops_.size(), target);
    return emit(op::br(0, c, r(a), b, 0));
  }
  Addr jmp(const std::string& target) {
    fixups_.emplace_back(ops_.size(), target);
    return emit(op::jmp(0, 0));
  }
  Addr halt() { return emit(op::halt(0)); }

  std::vector<MicroOp> finish() {
    for (auto& [i, name] : fixups_) ops_[i].target = labels_.at(name);
    return std::move(ops_);
  }

 private:
  Addr ip_;
  std::vector<MicroOp> ops_;
  std::map<std::string, Addr> labels_;
  std::vector<std::pair<std::size_t, std::string>> fixups_;
};

std::uint64_t pick(std::uint64_t v, std::uint64_t dflt) { return v ? v : dflt; }

std::uint64_t unique_lines(const std::vector<Addr>& stream) {
  std::unordered_set<Addr> s;
  for (Addr a : stream) s.insert(line_of(a));
  return s.size();
}

// Fisher-Yates over a raw 64-bit engine so layouts do not depend on the
// standard library's distribution implementations.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

Workload make_stride(const WorkloadSpec& spec) {
  const std::uint64_t n = pick(spec.size, 100'000);
  const std::uint64_t stride = spec.stride;
  const std::uint64_t passes = pick(spec.passes, 2);
  if (stride == 0) throw std::invalid_argument("stride must be positive");
  constexpr Addr base = 0x1000'0000;

  Asm a;
  a.mov_imm(8, S(passes));
  a.label("outer");
  a.mov_imm(1, S(base));
  a.mov_imm(3, S(base + n * stride));
  a.label("loop");
  const Addr crit = a.load(2, mem(r(1)));
  a.alu(OpKind::ADD, 1, 1, I(S(stride)));
  a.br(Cond::lt, 1, R(3), "loop");
  a.alu(OpKind::SUB, 8, 8, I(1));
  a.br(Cond::ne, 8, I(0), "outer");
  a.halt();

  Workload w;
  w.image.ops = a.finish();
  w.oracle.critical_ip = crit;
  w.oracle.has_stream = true;
  for (std::uint64_t p = 0; p < passes; ++p)
    for (std::uint64_t i = 0; i < n; ++i) w.oracle.stream.push_back(base + i * stride);
  w.oracle.shape = SliceShape{1, 1};
  return w;
}

Workload make_indirect(const WorkloadSpec& spec, std::mt19937_64& rng) {
  const std::uint64_t n = pick(spec.size, 100'000);
  const std::uint64_t m = pick(spec.table, 1u << 18);
  const std::uint64_t spacing = spec.spacing;
  const std::uint64_t passes = pick(spec.passes, 2);
  if (!std::has_single_bit(spacing)) throw std::invalid_argument("indirect spacing must be a power of two");
  constexpr Addr b_base = 0x1000'0000;
  constexpr Addr a_base = 0x4000'0000;

  std::vector<std::uint64_t> b(n);
  for (auto& x : b) x = rng() % m;

  Asm a;
  a.mov_imm(8, S(passes));
  a.mov_imm(1, S(b_base));
  a.mov_imm(2, S(a_base));
  a.mov_imm(12, S(n));
  a.label("outer");
  a.mov_imm(0, 0);
  a.label("loop");
  a.load(3, mem(r(1), r(0), 8));
  const bool shifted = spacing > 8;
  Addr crit;
  if (shifted) {
    a.alu(OpKind::SHL, 3, 3, I(std::countr_zero(spacing)));
    crit = a.load(4, mem(r(2), r(3), 1));
  } else {
    crit = a.load(4, mem(r(2), r(3), static_cast<std::uint8_t>(spacing)));
  }
  a.alu(OpKind::ADD, 7, 7, R(4));
  a.alu(OpKind::ADD, 0, 0, I(1));
  a.br(Cond::lt, 0, R(12), "loop");
  a.alu(OpKind::SUB, 8, 8, I(1));
  a.br(Cond::ne, 8, I(0), "outer");
  a.halt();

  Workload w;
  w.image.ops = a.finish();
  for (std::uint64_t i = 0; i < n; ++i) w.image.memory.emplace_back(b_base + 8 * i, b[i]);
  w.oracle.critical_ip = crit;
  w.oracle.has_stream = true;
  for (std::uint64_t p = 0; p < passes; ++p)
    for (std::uint64_t i = 0; i < n; ++i) w.oracle.stream.push_back(a_base + b[i] * spacing);
  w.oracle.shape = SliceShape{2, shifted ? 2u : 1u};
  return w;
}

Workload make_linked_list(const WorkloadSpec& spec, std::mt19937_64& rng) {
  const std::uint64_t n = pick(spec.size, 50'000);
  const std::uint64_t passes = pick(spec.passes, 3);
  constexpr Addr arena = 0x2000'0000;
  constexpr Addr node_size = 64;

  // Nodes occupy the first n slots of a shuffled arena four times larger.
  std::vector<std::uint64_t> slots(4 * n);
  for (std::uint64_t i = 0; i < slots.size(); ++i) slots[i] = i;
  shuffle(slots, rng);
  std::vector<Addr> node(n);
  for (std::uint64_t i = 0; i < n; ++i) node[i] = arena + slots[i] * node_size;

  Asm a;
  a.mov_imm(8, S(passes));
  a.label("outer");
  a.mov_imm(1, S(node[0]));
  a.label("loop");
  const Addr crit = a.load(2, mem(r(1), 8));
  a.alu(OpKind::ADD, 7, 7, R(2));
  a.load(1, mem(r(1)));
  a.br(Cond::ne, 1, I(0), "loop");
  a.alu(OpKind::SUB, 8, 8, I(1));
  a.br(Cond::ne, 8, I(0), "outer");
  a.halt();

  Workload w;
  w.image.ops = a.finish();
  for (std::uint64_t i = 0; i < n; ++i) {
    w.image.memory.emplace_back(node[i], i + 1 < n ? node[i + 1] : 0);
    w.image.memory.emplace_back(node[i] + 8, i);
  }
  w.oracle.critical_ip = crit;
  w.oracle.has_stream = true;
  w.oracle.lookahead_scaled = false;
  for (std::uint64_t p = 0; p < passes; ++p)
    for (std::uint64_t i = 0; i < n; ++i) w.oracle.stream.push_back(node[i] + 8);
  w.oracle.shape = SliceShape{2, 0};
  return w;
}

Workload make_bfs(const WorkloadSpec& spec, std::mt19937_64& rng) {
  const std::uint64_t v = pick(spec.size, 32'768);
  const std::uint64_t dmin = spec.degree_min;
  const std::uint64_t dmax = spec.degree_max;
  const std::uint64_t passes = pick(spec.passes, 2);
  if (dmin < 2 || dmax < dmin) throw std::invalid_argument("bfs degrees must satisfy 2 <= min <= max");
  constexpr Addr vlist_base = 0x1000'0000;
  constexpr Addr row_base = 0x1800'0000;
  constexpr Addr col_base = 0x2000'0000;
  constexpr Addr depth_base = 0x3000'0000;

  std::vector<std::uint64_t> order(v);
  for (std::uint64_t i = 0; i < v; ++i) order[i] = i;
  shuffle(order, rng);
  std::vector<std::uint64_t> row(v + 1, 0);
  std::vector<std::uint64_t> col;
  for (std::uint64_t u = 0; u < v; ++u) {
    const std::uint64_t deg = dmin + rng() % (dmax - dmin + 1);
    for (std::uint64_t k = 0; k < deg; ++k) col.push_back(rng() % v);
    row[u + 1] = col.size();
  }

  // r0 i, r1 vlist, r2 rowstart, r3 col, r4 depth, r5 u, r6 e, r9 end,
  // r10 w, r11 depth[w], r12 |V|, r13 sum
  Asm a;
  a.mov_imm(8, S(passes));
  a.mov_imm(1, S(vlist_base));
  a.mov_imm(2, S(row_base));
  a.mov_imm(3, S(col_base));
  a.mov_imm(4, S(depth_base));
  a.mov_imm(12, S(v));
  a.label("outer");
  a.mov_imm(0, 0);
  a.label("vloop");
  a.load(5, mem(r(1), r(0), 8));
  a.load(6, mem(r(2), r(5), 8));
  a.load(9, mem(r(2), r(5), 8, 8));
  a.load(10, mem(r(3), r(6), 8));
  const Addr crit = a.load(11, mem(r(4), r(10), 8));
  a.alu(OpKind::ADD, 13, 13, R(11));
  a.alu(OpKind::ADD, 6, 6, I(1));
  a.label("eloop");
  a.load(10, mem(r(3), r(6), 8));
  a.load(11, mem(r(4), r(10), 8));
  a.alu(OpKind::ADD, 13, 13, R(11));
  a.alu(OpKind::ADD, 6, 6, I(1));
  a.br(Cond::lt, 6, R(9), "eloop");
  a.alu(OpKind::ADD, 0, 0, I(1));
  a.br(Cond::lt, 0, R(12), "vloop");
  a.alu(OpKind::SUB, 8, 8, I(1));
  a.br(Cond::ne, 8, I(0), "outer");
  a.halt();

  Workload w;
  w.image.ops = a.finish();
  for (std::uint64_t i = 0; i < v; ++i) w.image.memory.emplace_back(vlist_base + 8 * i, order[i]);
  for (std::uint64_t i = 0; i <= v; ++i) w.image.memory.emplace_back(row_base + 8 * i, row[i]);
  for (std::uint64_t i = 0; i < col.size(); ++i) w.image.memory.emplace_back(col_base + 8 * i, col[i]);
  w.oracle.critical_ip = crit;
  w.oracle.has_stream = true;
  for (std::uint64_t p = 0; p < passes; ++p)
    for (std::uint64_t i = 0; i < v; ++i) w.oracle.stream.push_back(depth_base + 8 * col[row[order[i]]]);
  w.oracle.shape = SliceShape{4, 1};
  return w;
}

Workload make_fig6(const WorkloadSpec& spec) {
  const std::uint64_t n = pick(spec.size, 100'000);
  const std::uint64_t passes = pick(spec.passes, 1);
  constexpr Addr stack = 0x7fff'0000;
  constexpr Addr cell = 0x6000'0000;
  constexpr Addr array = 0x1000'0000;

  // rax=r0 rbx=r1 rcx=r2 rdx=r3 rsp=r15
  Asm a;
  a.mov_imm(8, S(passes));
  a.mov_imm(15, S(stack));
  a.mov_imm(9, 1);
  a.mov_imm(10, 3);
  a.mov_imm(12, S(n));
  a.label("outer");
  a.mov_imm(0, 0);
  a.label("loop");
  a.load(3, mem(r(15), 8));
  a.load(1, mem(r(3)));
  a.alu(OpKind::MUL, 9, 9, R(10));
  const Addr crit = a.load(2, mem(r(1), r(0), 8));
  a.alu(OpKind::ADD, 0, 0, I(1));
  a.alu(OpKind::ADD, 11, 11, R(2));
  a.br(Cond::lt, 0, R(12), "loop");
  a.alu(OpKind::SUB, 8, 8, I(1));
  a.br(Cond::ne, 8, I(0), "outer");
  a.halt();

  Workload w;
  w.image.ops = a.finish();
  w.image.memory.emplace_back(stack + 8, cell);
  w.image.memory.emplace_back(cell, array);
  for (std::uint64_t i = 0; i < n; ++i) w.image.memory.emplace_back(array + 8 * i, i * 3);
  w.oracle.critical_ip = crit;
  w.oracle.has_stream = true;
  for (std::uint64_t p = 0; p < passes; ++p)
    for (std::uint64_t i = 0; i < n; ++i) w.oracle.stream.push_back(array + 8 * i);
  w.oracle.shape = SliceShape{3, 1};
  return w;
}

Workload make_nested(const WorkloadSpec& spec) {
  const std::uint64_t outer = pick(spec.size, 20'000);
  const std::uint64_t k = pick(spec.inner, 2);
  if (k > 6) throw std::invalid_argument("nested_two_phase inner trip count must be <= 6");
  constexpr Addr base_a = 0x1000'0000;
  constexpr Addr base_b = 0x4000'0000;

  // r4 running index, r5 inner counter, r6 phase
  Asm a;
  a.mov_imm(8, S(outer));
  a.mov_imm(4, 0);
  a.mov_imm(6, 0);
  a.label("outer");
  a.mov_imm(5, 0);
  a.label("inner");
  a.br(Cond::eq, 6, I(0), "path_a");
  a.alu(OpKind::SHL, 3, 4, I(7));
  a.alu(OpKind::ADD, 3, 3, I(S(base_b)));
  a.jmp("common");
  a.label("path_a");
  a.br(Cond::eq, 6, I(0), "path_a_body");
  a.label("path_a_body");
  a.alu(OpKind::SHL, 3, 4, I(6));
  a.alu(OpKind::ADD, 3, 3, I(S(base_a)));
  a.label("common");
  const Addr crit = a.load(7, mem(r(3)));
  a.br(Cond::eq, 6, I(0), "tail");
  a.label("tail");
  a.alu(OpKind::ADD, 4, 4, I(1));
  a.alu(OpKind::ADD, 5, 5, I(1));
  a.br(Cond::lt, 5, I(S(k)), "inner");
  a.alu(OpKind::XOR, 6, 6, I(1));
  a.alu(OpKind::SUB, 8, 8, I(1));
  a.br(Cond::ne, 8, I(0), "outer");
  a.halt();

  Workload w;
  w.image.ops = a.finish();
  w.oracle.critical_ip = crit;
  w.oracle.has_stream = true;
  w.oracle.single_context = false;
  w.oracle.stream.reserve(outer * k);
  std::uint64_t j = 0;
  for (std::uint64_t o = 0; o < outer; ++o)
    for (std::uint64_t i = 0; i < k; ++i, ++j) w.oracle.stream.push_back(o % 2 == 0 ? base_a + (j << 6) : base_b + (j << 7));
  return w;
}

Workload make_file(const WorkloadSpec& spec) {
  std::ifstream in(spec.program_path);
  if (!in) throw std::invalid_argument("cannot open program file '" + spec.program_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Workload w;
  w.image = parse_program_text(ss.str());
  return w;
}

}  // namespace

Workload generate(const WorkloadSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  Workload w;
  switch (spec.kind) {
    case WorkloadKind::stride: w = make_stride(spec); break;
    case WorkloadKind::indirect: w = make_indirect(spec, rng); break;
    case WorkloadKind::linked_list: w = make_linked_list(spec, rng); break;
    case WorkloadKind::bfs_csr: w = make_bfs(spec, rng); break;
    case WorkloadKind::double_deref_fig6: w = make_fig6(spec); break;
    case WorkloadKind::nested_two_phase: w = make_nested(spec); break;
    case WorkloadKind::file: w = make_file(spec); break;
  }
  w.spec = spec;
  w.oracle.unique_lines = unique_lines(w.oracle.stream);
  return w;
}

}  // namespace sempf
