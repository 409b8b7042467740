#include "sempf/program_text.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

namespace sempf {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  s = trim(s);
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  if (s.empty()) return false;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || p != s.data() + s.size()) return false;
  out = static_cast<std::int64_t>(neg ? (~v + 1) : v);
  return true;
}

bool looks_numeric(std::string_view s) {
  s = trim(s);
  return !s.empty() && (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '-' || s[0] == '+');
}

struct LineParser {
  int line;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line, what); }

  Reg reg(std::string_view s) const {
    auto r = parse_reg(trim(s));
    if (!r) fail("bad register '" + std::string(s) + "'");
    return *r;
  }

  std::int64_t num(std::string_view s) const {
    std::int64_t v = 0;
    if (!parse_int(s, v)) fail("bad number '" + std::string(s) + "'");
    return v;
  }

  Operand operand(std::string_view s) const {
    s = trim(s);
    if (looks_numeric(s)) return Operand::immediate(num(s));
    return Operand::of(reg(s));
  }

  // [base + index*scale + disp]; terms may appear in any order, disp may be negative.
  MemRef memref(std::string_view s) const {
    s = trim(s);
    if (s.size() < 2 || s.front() != '[' || s.back() != ']') fail("expected [addressing]");
    s = s.substr(1, s.size() - 2);
    MemRef m;
    std::string expr;
    for (char c : s) {
      if (c == '-') expr += "+-";
      else if (!std::isspace(static_cast<unsigned char>(c))) expr += c;
    }
    for (std::string_view term : split(expr, '+')) {
      if (term.empty()) continue;
      if (auto star = term.find('*'); star != std::string_view::npos) {
        if (m.index.valid()) fail("two index terms");
        m.index = reg(term.substr(0, star));
        const std::int64_t sc = num(term.substr(star + 1));
        if (sc != 1 && sc != 2 && sc != 4 && sc != 8) fail("scale must be 1, 2, 4 or 8");
        m.scale = static_cast<std::uint8_t>(sc);
      } else if (looks_numeric(term)) {
        m.disp += num(term);
      } else if (!m.base.valid()) {
        m.base = reg(term);
      } else if (!m.index.valid()) {
        m.index = reg(term);
        m.scale = 1;
      } else {
        fail("too many registers in addressing");
      }
    }
    if (!m.base.valid()) fail("addressing needs a base register");
    return m;
  }

  MicroOp instruction(Addr ip, std::string_view body) const {
    auto sections = split(body, '|');
    std::string_view head = sections[0];
    auto sp = head.find_first_of(" \t");
    std::string_view mnemonic = trim(head.substr(0, sp));
    std::string_view rest = sp == std::string_view::npos ? std::string_view{} : trim(head.substr(sp));
    auto kind = parse_op_kind(mnemonic);
    if (!kind) fail("unknown op '" + std::string(mnemonic) + "'");
    std::vector<std::string_view> args;
    if (!rest.empty()) args = split(rest, ',');
    auto want = [&](std::size_t n_args, std::size_t n_sections) {
      if (args.size() != n_args) fail(std::string(mnemonic) + " expects " + std::to_string(n_args) + " operand(s)");
      if (sections.size() != n_sections) fail(std::string(mnemonic) + " has wrong number of '|' sections");
    };

    switch (*kind) {
      case OpKind::MOV_IMM:
        want(2, 1);
        return op::mov_imm(ip, reg(args[0]), num(args[1]));
      case OpKind::MOV:
        want(2, 1);
        return op::mov(ip, reg(args[0]), reg(args[1]));
      case OpKind::LOAD:
        want(1, 2);
        return op::load(ip, reg(args[0]), memref(sections[1]));
      case OpKind::STORE:
        want(1, 2);
        return op::store(ip, operand(args[0]), memref(sections[1]));
      case OpKind::BR: {
        want(2, 2);
        auto br = split(sections[1], ',');
        if (br.size() != 2) fail("BR expects 'cond, target'");
        auto c = parse_cond(br[0]);
        if (!c) fail("bad condition '" + std::string(br[0]) + "'");
        return op::br(ip, *c, reg(args[0]), operand(args[1]), static_cast<Addr>(num(br[1])));
      }
      case OpKind::JMP:
        want(0, 2);
        return op::jmp(ip, static_cast<Addr>(num(sections[1])));
      case OpKind::HALT:
        want(0, 1);
        return op::halt(ip);
      default:
        want(3, 1);
        return op::alu(ip, *kind, reg(args[0]), reg(args[1]), operand(args[2]));
    }
  }
};

}  // namespace

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

ProgramImage parse_program_text(std::string_view text) {
  ProgramImage image;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    LineParser p{line_no};
    auto colon = line.find(':');
    if (colon == std::string_view::npos) p.fail("expected 'address: ...'");
    const auto addr = static_cast<Addr>(p.num(line.substr(0, colon)));
    std::string_view body = trim(line.substr(colon + 1));
    if (body.empty()) p.fail("empty line body");
    if (looks_numeric(body)) {
      image.memory.emplace_back(addr, static_cast<std::uint64_t>(p.num(body)));
    } else {
      image.ops.push_back(p.instruction(addr, body));
    }
    if (eol == text.size()) break;
  }
  return image;
}

std::string format_mem(const MemRef& m) {
  std::string s = "[" + to_string(m.base);
  if (m.index.valid()) s += " + " + to_string(m.index) + "*" + std::to_string(m.scale);
  if (m.disp > 0) s += " + " + std::to_string(m.disp);
  if (m.disp < 0) s += " - " + std::to_string(-static_cast<std::uint64_t>(m.disp));
  return s + "]";
}

namespace {
std::string format_operand(const Operand& o) {
  if (o.is_reg()) return to_string(o.reg);
  return std::to_string(o.imm);
}
}  // namespace

std::string format_op(const MicroOp& m) {
  std::string s = hex(m.ip) + ": " + std::string(to_string(m.kind));
  switch (m.kind) {
    case OpKind::MOV_IMM:
    case OpKind::MOV:
      s += " " + to_string(m.dest) + ", " + format_operand(m.src1);
      break;
    case OpKind::LOAD:
      s += " " + to_string(m.dest) + " | " + format_mem(m.mem);
      break;
    case OpKind::STORE:
      s += " " + format_operand(m.src1) + " | " + format_mem(m.mem);
      break;
    case OpKind::BR:
      s += " " + format_operand(m.src1) + ", " + format_operand(m.src2) + " | " + std::string(to_string(m.cond)) +
           ", " + hex(m.target);
      break;
    case OpKind::JMP:
      s += " | " + hex(m.target);
      break;
    case OpKind::HALT:
      break;
    default:
      s += " " + to_string(m.dest) + ", " + format_operand(m.src1) + ", " + format_operand(m.src2);
      break;
  }
  return s;
}

std::string format_program(const ProgramImage& image) {
  std::string out;
  for (const MicroOp& m : image.ops) out += format_op(m) + "\n";
  if (!image.memory.empty()) {
    out += "# memory image\n";
    for (const auto& [a, v] : image.memory) out += hex(a) + ": " + hex(v) + "\n";
  }
  return out;
}

}  // namespace sempf
