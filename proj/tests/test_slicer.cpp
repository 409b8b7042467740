#include <algorithm>
#include <variant>

#include "doctest.h"
#include "sempf/injector.hpp"
#include "sempf/slicer.hpp"
#include "sempf/workloads.hpp"
#include "test_util.hpp"

using namespace sempf;
using test::Tracer;

namespace {

Reg r(int i) { return Reg::arch(i); }

struct Built {
  SliceDraft draft;
  std::vector<Annotation> annotations;
  TrimResult trimmed;
};

// Generation walk at the `first`-th instance of `ip`, validation walks at the
// next `rounds` instances, then classification and trim.
Built build_slice(Tracer& t, Addr ip, int first, int rounds = 3, WalkConfig cfg = {}) {
  ContextKey key = t.run_to_load(ip, first, cfg.context_bits);
  WalkResult g = walk_generate(t.hist, key, cfg);
  REQUIRE(std::holds_alternative<SliceDraft>(g));
  Built b{std::get<SliceDraft>(g), {}, {}};
  for (int i = 0; i < rounds; ++i) {
    const ContextKey k = t.run_to_load(ip, 1, cfg.context_bits);
    REQUIRE(k == key);
    WalkResult v = walk_generate(t.hist, k, cfg);
    REQUIRE(std::holds_alternative<SliceDraft>(v));
    REQUIRE(validate_pass(b.draft, std::get<SliceDraft>(v)) == Validation::consistent);
  }
  b.annotations = classify_draft(b.draft);
  b.trimmed = trim(b.draft, b.annotations);
  return b;
}

ProgramImage straight_line_loop() {
  return ProgramImage{{
                          op::mov_imm(0x0, r(1), 0x1000),
                          op::load(0x4, r(2), mem(r(1))),
                          op::alu(0x8, OpKind::ADD, r(1), r(1), Operand::immediate(8)),
                          op::br(0xc, Cond::lt, r(1), Operand::immediate(0x2000), 0x4),
                          op::halt(0x10),
                      },
                      {}};
}

// MOV_IMM r1; `adds` x ADD r1, r1, 8; LOAD r2, [r1]; HALT
ProgramImage add_chain(int adds) {
  std::vector<MicroOp> ops{op::mov_imm(0x0, r(1), 0x1000)};
  Addr ip = 4;
  for (int i = 0; i < adds; ++i, ip += 4) ops.push_back(op::alu(ip, OpKind::ADD, r(1), r(1), Operand::immediate(8)));
  ops.push_back(op::load(ip, r(2), mem(r(1))));
  ops.push_back(op::halt(ip + 4));
  return ProgramImage{ops, {}};
}

const MicroOp& op_at(const ProgramImage& img, Addr ip) {
  return *std::find_if(img.ops.begin(), img.ops.end(), [&](const MicroOp& m) { return m.ip == ip; });
}

}  // namespace

TEST_CASE("walk: straight-line add/load loop yields {ADD, LOAD}") {
  const ProgramImage img = straight_line_loop();
  Tracer t(img);
  const ContextKey k = t.run_to_load(0x4, 8);
  WalkResult w = walk_generate(t.hist, k);
  REQUIRE(std::holds_alternative<SliceDraft>(w));
  const SliceDraft& d = std::get<SliceDraft>(w);
  REQUIRE(d.ops.size() == 2);
  CHECK(d.ops[0] == op_at(img, 0x8));
  CHECK(d.ops[1] == op_at(img, 0x4));
  CHECK(d.round_trips == 1);
  // Trigger, BR, ADD, previous LOAD.
  CHECK(d.scanned == 4);
  CHECK(d.load_depth() == 1);
  CHECK(d.alu_count() == 1);
}

TEST_CASE("walk: the double-dereference loop keeps the chain and drops the multiply") {
  const Workload w = generate(WorkloadSpec{WorkloadKind::double_deref_fig6});
  const ProgramImage& img = w.image;
  Tracer t(img);
  const ContextKey k = t.run_to_load(w.oracle.critical_ip, 8);
  WalkResult res = walk_generate(t.hist, k);
  REQUIRE(std::holds_alternative<SliceDraft>(res));
  const SliceDraft& d = std::get<SliceDraft>(res);

  // Hand walk, youngest to oldest from LOAD r2,[r1+r0*8]: MUL r9 (not needed),
  // LOAD r1,[r3], LOAD r3,[r15+8], then the previous iteration's BR, ADD r0,
  // ADD r11 (not needed) and the previous critical LOAD, which ends the trip.
  const Addr crit = w.oracle.critical_ip;
  std::vector<MicroOp> expect = {op_at(img, crit + 4), op_at(img, crit - 12), op_at(img, crit - 8), op_at(img, crit)};
  CHECK(expect[0].kind == OpKind::ADD);
  CHECK(expect[1].kind == OpKind::LOAD);
  CHECK(d.ops == expect);
  for (const MicroOp& m : d.ops) CHECK(m.kind != OpKind::MUL);
  CHECK(d.load_depth() == 3);
}

TEST_CASE("walk: length cap") {
  {
    Tracer t(add_chain(14));  // MOV_IMM + 14 ADD + LOAD = 16 ops
    const ContextKey k = t.run_to_load(4 + 14 * 4, 1);
    WalkResult w = walk_generate(t.hist, k);
    REQUIRE(std::holds_alternative<SliceDraft>(w));
    CHECK(std::get<SliceDraft>(w).ops.size() == 16);
  }
  {
    Tracer t(add_chain(15));
    const ContextKey k = t.run_to_load(4 + 15 * 4, 1);
    CHECK(std::get<AbortCause>(walk_generate(t.hist, k)) == AbortCause::too_long);
  }
  {
    Tracer t(add_chain(20));
    const ContextKey k = t.run_to_load(4 + 20 * 4, 1);
    CHECK(std::get<AbortCause>(walk_generate(t.hist, k)) == AbortCause::too_long);
  }
}

TEST_CASE("walk: a producer that reads flags is a complex instruction") {
  // r1 <- MOV f, not a legal slice producer since f is flags.
  const ProgramImage img{{
                             op::mov_imm(0x0, r(3), 5),
                             op::alu(0x4, OpKind::SUB, r(4), r(3), Operand::immediate(5)),
                             op::mov(0x8, r(1), Reg::flags()),
                             op::load(0xc, r(2), mem(r(1), 0x1000)),
                             op::halt(0x10),
                         },
                         {}};
  Tracer t(img);
  const ContextKey k = t.run_to_load(0xc, 1);
  CHECK(std::get<AbortCause>(walk_generate(t.hist, k)) == AbortCause::complex_instruction);
}

TEST_CASE("walk: store/load pairs are renamed through a temporary") {
  // STORE r3 -> [r15]; LOAD r1 <- [r15]; LOAD r2 <- [r1]
  const ProgramImage img{{
                             op::mov_imm(0x0, r(15), 0x8000),
                             op::mov_imm(0x4, r(3), 0x9000),
                             op::store(0x8, Operand::of(r(3)), mem(r(15))),
                             op::load(0xc, r(1), mem(r(15))),
                             op::load(0x10, r(2), mem(r(1))),
                             op::halt(0x14),
                         },
                         {}};
  Tracer t(img);
  const ContextKey k = t.run_to_load(0x10, 1);
  WalkResult w = walk_generate(t.hist, k);
  REQUIRE(std::holds_alternative<SliceDraft>(w));
  const SliceDraft& d = std::get<SliceDraft>(w);
  CHECK(d.temps_used == 1);
  REQUIRE(d.ops.size() == 4);
  CHECK(d.ops[0] == op::mov_imm(0x4, r(3), 0x9000));
  CHECK(d.ops[1] == op::mov(0x8, Reg::temp(0), r(3)));
  CHECK(d.ops[2] == op::mov(0xc, r(1), Reg::temp(0)));
  CHECK(d.ops[3] == op_at(img, 0x10));
}

TEST_CASE("walk occupancy") {
  CHECK(walk_occupancy(1) == 1);
  CHECK(walk_occupancy(8) == 1);
  CHECK(walk_occupancy(9) == 2);
  CHECK(walk_occupancy(128) == 16);
  CHECK(walk_occupancy(100000) == 64);
}

TEST_CASE("validate_pass") {
  const ProgramImage img = straight_line_loop();
  Tracer t(img);
  const ContextKey k = t.run_to_load(0x4, 8);
  SliceDraft d = std::get<SliceDraft>(walk_generate(t.hist, k));
  const ContextKey k2 = t.run_to_load(0x4, 1);
  const SliceDraft again = std::get<SliceDraft>(walk_generate(t.hist, k2));
  CHECK(validate_pass(d, again) == Validation::consistent);
  CHECK(d.value_log[0].size() == 2);
  CHECK(d.value_log[0][1] - d.value_log[0][0] == 8);

  SliceDraft flipped = again;
  flipped.ops[0].src2 = Operand::immediate(16);  // a different producer
  CHECK(validate_pass(d, flipped) == Validation::inconsistent);
  CHECK(d.value_log[0].size() == 2);
}

TEST_CASE("classify_values examples") {
  CHECK(classify_values({0x2000, 0x2000, 0x2000, 0x2000}) == Annotation::constant(0x2000));
  CHECK(classify_values({8, 16, 24, 32}) == Annotation::stride(8));
  CHECK(classify_values({3, 9, 4, 7}) == Annotation::dynamic());
  CHECK(classify_values({32, 24, 16, 8}) == Annotation::stride(-8));
}

TEST_CASE("trim: double-dereference slice is three ops {const move, stride add, load}") {
  const Workload w = generate(WorkloadSpec{WorkloadKind::double_deref_fig6});
  Tracer t(w.image);
  Built b = build_slice(t, w.oracle.critical_ip, 8);
  REQUIRE(std::holds_alternative<std::vector<SliceOp>>(b.trimmed));
  const auto& s = std::get<std::vector<SliceOp>>(b.trimmed);
  REQUIRE(s.size() == 3);
  int movs = 0, strides = 0, loads = 0;
  for (const SliceOp& o : s) {
    if (o.kind == OpKind::MOV_IMM && o.annotation.kind == Annotation::Kind::constant) ++movs;
    if (o.kind == OpKind::ADD && o.lookahead_scaled && o.annotation.kind == Annotation::Kind::stride) ++strides;
    if (o.kind == OpKind::LOAD) ++loads;
  }
  CHECK(movs == 1);
  CHECK(strides == 1);
  CHECK(loads == 1);
  CHECK(s.back().kind == OpKind::LOAD);
  CHECK_FALSE(check_slice(s).has_value());
}

TEST_CASE("trim: constant address collapses to an immediate move and the load") {
  // LOAD r1 <- [r15] always returns the same pointer.
  const ProgramImage img{{
                             op::mov_imm(0x0, r(15), 0x8000),
                             op::mov_imm(0x4, r(8), 0),
                             op::load(0x8, r(1), mem(r(15))),
                             op::load(0xc, r(2), mem(r(1))),
                             op::alu(0x10, OpKind::ADD, r(8), r(8), Operand::immediate(1)),
                             op::br(0x14, Cond::lt, r(8), Operand::immediate(100), 0x8),
                             op::halt(0x18),
                         },
                         {{0x8000, 0x5000}}};
  Tracer t(img);
  Built b = build_slice(t, 0xc, 8);
  const auto& s = std::get<std::vector<SliceOp>>(b.trimmed);
  REQUIRE(s.size() == 2);
  CHECK(s[0].kind == OpKind::MOV_IMM);
  CHECK(s[0].a.imm == 0x5000);
  CHECK(s[1].kind == OpKind::LOAD);
}

TEST_CASE("trim: pointer chasing keeps every op and only renames destinations") {
  const Workload w = generate(WorkloadSpec{WorkloadKind::linked_list, 200});
  Tracer t(w.image);
  Built b = build_slice(t, w.oracle.critical_ip, 8);
  const auto& s = std::get<std::vector<SliceOp>>(b.trimmed);
  REQUIRE(s.size() == b.draft.ops.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].kind == b.draft.ops[i].kind);
    CHECK(s[i].origin_ip == b.draft.ops[i].ip);
    CHECK(s[i].dest.is_temp());
    CHECK(s[i].annotation.kind == Annotation::Kind::dynamic);
  }
  CHECK_FALSE(check_slice(s).has_value());
}

TEST_CASE("trim: more live temporaries than available aborts") {
  const ProgramImage img = straight_line_loop();
  Tracer t(img);
  Built b = build_slice(t, 0x4, 8);
  CHECK(std::get<AbortCause>(trim(b.draft, b.annotations, 0)) == AbortCause::too_many_temps);
}

TEST_CASE("property: armed slices have no dangling reads, write only temps, and replay the next address at L=1") {
  const WorkloadKind kinds[] = {WorkloadKind::stride, WorkloadKind::indirect, WorkloadKind::linked_list,
                                WorkloadKind::double_deref_fig6, WorkloadKind::bfs_csr};
  for (WorkloadKind kind : kinds) {
    CAPTURE(to_string(kind));
    WorkloadSpec spec{kind};
    spec.size = kind == WorkloadKind::bfs_csr ? 512 : 2000;
    const Workload w = generate(spec);
    Tracer t(w.image);
    const Addr crit = w.oracle.critical_ip;
    Built b = build_slice(t, crit, 8);
    REQUIRE(std::holds_alternative<std::vector<SliceOp>>(b.trimmed));
    const auto& s = std::get<std::vector<SliceOp>>(b.trimmed);
    CHECK_FALSE(check_slice(s).has_value());

    // Step forward several instances; at each, just before the load executes,
    // the slice at L=1 must name the next instance's address (for pointer
    // chasing the slice always advances exactly one node).
    for (int rep = 0; rep < 20; ++rep) {
      // Stop right before the next instance of the critical load.
      while (t.prog.fetch(t.st.ip)->ip != crit || t.prog.fetch(t.st.ip)->kind != OpKind::LOAD) t.step();
      const ArchState before = t.st;
      const InjectionResult res = execute_slice(s, t.st, 1, nullptr, 0);
      CHECK(t.st.arch_equal(before));
      CHECK(t.st.regs == before.regs);
      t.step();  // current instance
      if (kind == WorkloadKind::bfs_csr) {
        // Only the first edge of each vertex is the critical instance; skip to it.
        t.run_to_load(crit, 1);
        const Addr next = *t.hist.at(0).event.eff_addr;
        CHECK(res.prefetch_addr == next);
        continue;
      }
      const ContextKey k = t.run_to_load(crit, 1);
      (void)k;
      CHECK(res.prefetch_addr == *t.hist.at(0).event.eff_addr);
    }
  }
}
