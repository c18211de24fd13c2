#pragma once

namespace msc::fixtures {

// Three-process demo MSC used throughout the tests and the README.
// Shapes from the usual drawing are encoded sq(uare), ci(rcle), di(amond).
inline const char* demo24_msc_text() {
  return R"(processes: p1 p2 p3
labels: sq ci di
events p1: e0:sq e1:sq e2:ci e3:sq e4:sq e5:ci e6:sq e7:ci
events p2: f0:di f1:di f2:di f3:di f4:di f5:di f6:di f7:di
events p3: g0:sq g1:ci g2:ci g3:sq g4:ci g5:ci g6:sq g7:ci
msg e0 g0 ; msg e1 f0 ; msg e2 g1 ; msg f1 g2 ; msg e3 f2 ; msg f3 g3
msg e4 g5 ; msg e5 f4 ; msg f5 g4 ; msg e6 g6 ; msg e7 f6 ; msg f7 g7
)";
}

// Four-process MSC whose reverse edges at bound 1 tie all processes
// together; exercises the canonical-linearization tie-breaking.
inline const char* relay4_msc_text() {
  return R"(processes: p1 p2 p3 p4
labels: a
events p1: a1:a a2:a a3:a a4:a
events p2: b1:a b2:a b3:a b4:a b5:a b6:a
events p3: c1:a c2:a c3:a c4:a c5:a
events p4: d1:a d2:a d3:a
msg a1 b1 ; msg a2 b2 ; msg a3 b4 ; msg a4 b6
msg d1 c1 ; msg d2 c2 ; msg d3 c4
msg b3 c3 ; msg b5 c5
)";
}

}  // namespace msc::fixtures
