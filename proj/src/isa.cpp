#include "sempf/isa.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>

namespace sempf {

namespace {

constexpr std::array<std::string_view, 15> kOpNames = {
    "MOV_IMM", "MOV", "ADD", "SUB", "MUL", "AND", "OR", "XOR",
    "SHL",     "SHR", "LOAD", "STORE", "BR", "JMP", "HALT"};

constexpr std::array<std::string_view, 4> kCondNames = {"eq", "ne", "lt", "ge"};

std::uint64_t operand_value(const Operand& o, const ArchState& s) {
  switch (o.kind) {
    case Operand::Kind::reg: return s.reg(o.reg);
    case Operand::Kind::imm: return static_cast<std::uint64_t>(o.imm);
    case Operand::Kind::none: break;
  }
  throw SimulationFault("missing operand");
}

}  // namespace

std::string to_string(Reg r) {
  if (r.is_arch()) return "r" + std::to_string(r.id);
  if (r.is_temp()) return "t" + std::to_string(r.id - kNumArchRegs);
  if (r.is_flags()) return "f";
  return "none";
}

std::optional<Reg> parse_reg(std::string_view name) {
  if (name == "f") return Reg::flags();
  if (name.size() < 2 || (name[0] != 'r' && name[0] != 't')) return std::nullopt;
  int n = 0;
  auto [p, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), n);
  if (ec != std::errc{} || p != name.data() + name.size()) return std::nullopt;
  if (name[0] == 'r' && n >= 0 && n < kNumArchRegs) return Reg::arch(n);
  if (name[0] == 't' && n >= 0 && n < kNumTempRegs) return Reg::temp(n);
  return std::nullopt;
}

std::string_view to_string(OpKind k) { return kOpNames[static_cast<std::size_t>(k)]; }

std::optional<OpKind> parse_op_kind(std::string_view name) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i)
    if (kOpNames[i] == name) return static_cast<OpKind>(i);
  return std::nullopt;
}

std::string_view to_string(Cond c) { return kCondNames[static_cast<std::size_t>(c)]; }

std::optional<Cond> parse_cond(std::string_view name) {
  for (std::size_t i = 0; i < kCondNames.size(); ++i)
    if (kCondNames[i] == name) return static_cast<Cond>(i);
  return std::nullopt;
}

RegSet MicroOp::sources() const {
  RegSet s;
  if (src1.is_reg()) s.set(src1.reg);
  if (src2.is_reg()) s.set(src2.reg);
  if (is_mem(kind)) {
    s.set(mem.base);
    s.set(mem.index);
  }
  return s;
}

namespace op {
MicroOp mov_imm(Addr ip, Reg d, std::int64_t v) {
  MicroOp m;
  m.ip = ip;
  m.kind = OpKind::MOV_IMM;
  m.dest = d;
  m.src1 = Operand::immediate(v);
  return m;
}
MicroOp mov(Addr ip, Reg d, Reg s) {
  MicroOp m;
  m.ip = ip;
  m.kind = OpKind::MOV;
  m.dest = d;
  m.src1 = Operand::of(s);
  return m;
}
MicroOp alu(Addr ip, OpKind k, Reg d, Reg a, Operand b) {
  MicroOp m;
  m.ip = ip;
  m.kind = k;
  m.dest = d;
  m.src1 = Operand::of(a);
  m.src2 = b;
  return m;
}
MicroOp load(Addr ip, Reg d, MemRef r) {
  MicroOp m;
  m.ip = ip;
  m.kind = OpKind::LOAD;
  m.dest = d;
  m.mem = r;
  return m;
}
MicroOp store(Addr ip, Operand data, MemRef r) {
  MicroOp m;
  m.ip = ip;
  m.kind = OpKind::STORE;
  m.src1 = data;
  m.mem = r;
  return m;
}
MicroOp br(Addr ip, Cond c, Reg a, Operand b, Addr target) {
  MicroOp m;
  m.ip = ip;
  m.kind = OpKind::BR;
  m.cond = c;
  m.src1 = Operand::of(a);
  m.src2 = b;
  m.target = target;
  return m;
}
MicroOp jmp(Addr ip, Addr target) {
  MicroOp m;
  m.ip = ip;
  m.kind = OpKind::JMP;
  m.target = target;
  return m;
}
MicroOp halt(Addr ip) {
  MicroOp m;
  m.ip = ip;
  m.kind = OpKind::HALT;
  return m;
}
}  // namespace op

MemRef mem(Reg base, std::int64_t disp) { return MemRef{base, Reg::none(), 1, disp}; }
MemRef mem(Reg base, Reg index, std::uint8_t scale, std::int64_t disp) {
  return MemRef{base, index, scale, disp};
}

// --- Memory -----------------------------------------------------------------

const Memory::Page* Memory::find(Addr page) const {
  auto it = pages_.find(page);
  return it == pages_.end() ? nullptr : &it->second;
}

Memory::Page& Memory::touch(Addr page) {
  auto [it, inserted] = pages_.try_emplace(page);
  if (inserted) it->second.fill(0);
  return it->second;
}

std::uint8_t Memory::read8(Addr addr) const {
  const Page* p = find(addr >> kPageBits);
  return p ? (*p)[addr & (kPageSize - 1)] : 0;
}

void Memory::write8(Addr addr, std::uint8_t value) {
  touch(addr >> kPageBits)[addr & (kPageSize - 1)] = value;
}

std::uint64_t Memory::read64(Addr addr) const {
  const Addr off = addr & (kPageSize - 1);
  if (off <= kPageSize - 8) {
    const Page* p = find(addr >> kPageBits);
    if (!p) return 0;
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | (*p)[off + static_cast<Addr>(i)];
    return v;
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | read8(addr + static_cast<Addr>(i));
  return v;
}

void Memory::write64(Addr addr, std::uint64_t value) {
  const Addr off = addr & (kPageSize - 1);
  if (off <= kPageSize - 8) {
    Page& p = touch(addr >> kPageBits);
    for (int i = 0; i < 8; ++i) p[off + static_cast<Addr>(i)] = static_cast<std::uint8_t>(value >> (8 * i));
    return;
  }
  for (int i = 0; i < 8; ++i) write8(addr + static_cast<Addr>(i), static_cast<std::uint8_t>(value >> (8 * i)));
}

bool Memory::operator==(const Memory& other) const {
  auto zero = [](const Page& p) { return std::all_of(p.begin(), p.end(), [](std::uint8_t b) { return b == 0; }); };
  for (const auto& [k, page] : pages_) {
    const Page* o = other.find(k);
    if (o ? *o != page : !zero(page)) return false;
  }
  for (const auto& [k, page] : other.pages_)
    if (!find(k) && !zero(page)) return false;
  return true;
}

bool ArchState::arch_equal(const ArchState& other) const {
  for (int i = 0; i < kNumArchRegs; ++i)
    if (regs[static_cast<std::size_t>(i)] != other.regs[static_cast<std::size_t>(i)]) return false;
  return reg(Reg::flags()) == other.reg(Reg::flags()) && ip == other.ip && halted == other.halted &&
         mem == other.mem;
}

// --- Program ----------------------------------------------------------------

Program::Program(std::vector<MicroOp> ops) : ops_(std::move(ops)) {
  index_.reserve(ops_.size());
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    if (!index_.emplace(ops_[i].ip, i).second)
      throw SimulationFault("duplicate ip " + std::to_string(ops_[i].ip));
  }
}

const MicroOp* Program::fetch(Addr ip) const {
  auto it = index_.find(ip);
  return it == index_.end() ? nullptr : &ops_[it->second];
}

const MicroOp* Program::next(Addr ip) const {
  auto it = index_.find(ip);
  if (it == index_.end() || it->second + 1 >= ops_.size()) return nullptr;
  return &ops_[it->second + 1];
}

void validate(const Program& program) {
  for (const MicroOp& m : program.ops()) {
    auto fail = [&](const std::string& why) {
      throw SimulationFault("ip " + std::to_string(m.ip) + ": " + why);
    };
    RegSet named = m.sources();
    if (m.dest.valid()) named.set(m.dest);
    for (int t = 0; t < kNumTempRegs; ++t)
      if (named.test(Reg::temp(t))) fail("temporary registers are reserved");
    if (m.dest.is_flags()) fail("flags cannot be an explicit destination");
    if (writes_dest(m.kind) && !m.dest.valid()) fail("missing destination");
    if (is_mem(m.kind)) {
      if (!m.mem.base.valid()) fail("missing base register");
      if (m.mem.scale != 1 && m.mem.scale != 2 && m.mem.scale != 4 && m.mem.scale != 8) fail("bad scale");
    }
    if (m.kind == OpKind::STORE && m.src1.kind == Operand::Kind::none) fail("store without data");
    if ((is_alu(m.kind) || m.kind == OpKind::BR) && (!m.src1.is_reg() || m.src2.kind == Operand::Kind::none))
      fail("missing source operand");
    if (m.kind == OpKind::MOV && !m.src1.is_reg()) fail("MOV needs a register source");
    if (m.kind == OpKind::MOV_IMM && !m.src1.is_imm()) fail("MOV_IMM needs an immediate");
    if ((m.kind == OpKind::BR || m.kind == OpKind::JMP) && !program.fetch(m.target)) fail("branch target outside program");
  }
}

// --- Execution --------------------------------------------------------------

Addr effective_address(const MicroOp& op, const ArchState& state) {
  Addr a = state.reg(op.mem.base);
  if (op.mem.index.valid()) a += state.reg(op.mem.index) * op.mem.scale;
  return a + static_cast<Addr>(op.mem.disp);
}

std::uint64_t flags_of(std::uint64_t result) {
  return (result == 0 ? 1u : 0u) | ((result >> 63) ? 2u : 0u);
}

std::uint64_t alu_eval(OpKind k, std::uint64_t a, std::uint64_t b) {
  switch (k) {
    case OpKind::ADD: return a + b;
    case OpKind::SUB: return a - b;
    case OpKind::MUL: return a * b;
    case OpKind::AND: return a & b;
    case OpKind::OR: return a | b;
    case OpKind::XOR: return a ^ b;
    case OpKind::SHL: return a << (b & 63);
    case OpKind::SHR: return a >> (b & 63);
    default: break;
  }
  throw SimulationFault("not an ALU op");
}

bool cond_eval(Cond c, std::uint64_t a, std::uint64_t b) {
  const auto sa = static_cast<std::int64_t>(a);
  const auto sb = static_cast<std::int64_t>(b);
  switch (c) {
    case Cond::eq: return a == b;
    case Cond::ne: return a != b;
    case Cond::lt: return sa < sb;
    case Cond::ge: return sa >= sb;
  }
  return false;
}

RetiredEvent step(ArchState& state, const Program& program) {
  if (state.halted) throw SimulationFault("step after HALT");
  const MicroOp* m = program.fetch(state.ip);
  if (!m) throw SimulationFault("fetch outside program at ip " + std::to_string(state.ip));

  RetiredEvent ev;
  ev.op = *m;
  ev.retire_index = state.retired;

  auto fallthrough = [&] {
    const MicroOp* n = program.next(m->ip);
    // Falling off the end faults on the following fetch, not here.
    state.ip = n ? n->ip : m->ip + 1;
  };

  switch (m->kind) {
    case OpKind::MOV_IMM:
    case OpKind::MOV: {
      const std::uint64_t v = operand_value(m->src1, state);
      state.reg(m->dest) = v;
      ev.result = v;
      fallthrough();
      break;
    }
    case OpKind::ADD: case OpKind::SUB: case OpKind::MUL: case OpKind::AND:
    case OpKind::OR: case OpKind::XOR: case OpKind::SHL: case OpKind::SHR: {
      const std::uint64_t v = alu_eval(m->kind, operand_value(m->src1, state), operand_value(m->src2, state));
      state.reg(m->dest) = v;
      state.reg(Reg::flags()) = flags_of(v);
      ev.result = v;
      fallthrough();
      break;
    }
    case OpKind::LOAD: {
      const Addr a = effective_address(*m, state);
      const std::uint64_t v = state.mem.read64(a);
      state.reg(m->dest) = v;
      ev.result = v;
      ev.eff_addr = a;
      fallthrough();
      break;
    }
    case OpKind::STORE: {
      const Addr a = effective_address(*m, state);
      const std::uint64_t v = operand_value(m->src1, state);
      state.mem.write64(a, v);
      ev.eff_addr = a;
      ev.stored = v;
      fallthrough();
      break;
    }
    case OpKind::BR: {
      const bool t = cond_eval(m->cond, operand_value(m->src1, state), operand_value(m->src2, state));
      ev.taken = t;
      if (t) state.ip = m->target;
      else fallthrough();
      break;
    }
    case OpKind::JMP:
      state.ip = m->target;
      break;
    case OpKind::HALT:
      state.halted = true;
      break;
  }
  ++state.retired;
  ++state.cycle;
  return ev;
}

}  // namespace sempf
