#include <chrono>
#include <cstdio>

#include "flexweld/weld.hpp"

using namespace flexweld;

static Polyline circle(double r, int n) {
  Polyline p;
  p.closed = true;
  for (int i = 0; i < n; ++i)
    p.vertices.push_back(std::polar(r, kTwoPi * i / n));
  return p;
}

static double now() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

static double wrap_pos(double a) { a = std::fmod(a, kTwoPi); return a < 0 ? a + kTwoPi : a; }

int main(int argc, char** argv) {
  int which = argc > 1 ? atoi(argv[1]) : 0;

  IterationConfig cfg;
  cfg.omega0 = circle(1.0, 256);
  cfg.omega0_star = circle(4.0, 256);
  cfg.eps_seq = {0.1, 0.1, 0.1};
  cfg.samples = 1024;

  if (which == 0) {
    double t0 = now();
    IterationState st = init(cfg);
    printf("init: sup_mismatch=%.6f area=%.6f (15pi=%.6f) t=%.2fs\n",
           st.sup_mismatch, st.area, 15 * 3.14159265358979, now() - t0);
    double mn = 1e9, mx = 0;
    for (double m : st.mismatch) { mn = std::min(mn, m); mx = std::max(mx, m); }
    printf("mismatch range [%.6f, %.6f]\n", mn, mx);

    t0 = now();
    std::vector<Angle> xs;
    for (int k = 0; k < 16; ++k) xs.push_back(Angle(kTwoPi * k / 16));
    FoliationSnapshot snap = foliate(st, xs);
    printf("foliate t=%.2fs midcurve len=%.4f (2pi*2=%.4f)\n", now() - t0,
           snap.midcurve.length(), 2 * kTwoPi);
    // radial leaves? check leaf 0 angles and midpoint radius
    for (int k = 0; k < 2; ++k) {
      printf("leaf %d:", k);
      for (auto& v : snap.leaves[k].vertices)
        printf(" (r=%.3f,a=%.3f)", std::abs(v), std::arg(v));
      printf("\n  midpoint r=%.4f (expect 2.0)\n", std::abs(snap.midpoints[k]));
    }
    // leaf length vs chord on this annulus
    printf("leaf0 len=%.4f chord=%.4f\n", snap.leaves[0].length(),
           std::abs(snap.leaves[0].vertices.back() - snap.leaves[0].vertices.front()));

    t0 = now();
    std::vector<double> mod;
    auto quads = build_quads(st, snap, &mod);
    printf("build_quads t=%.2fs moduli:", now() - t0);
    for (double m : mod) printf(" %.4f", m);
    printf("\n");
    std::vector<Angle> xs2;
    for (int k = 0; k < 32; ++k) xs2.push_back(Angle(kTwoPi * k / 32));
    FoliationSnapshot snap2 = foliate(st, xs2);
    std::vector<double> mod2;
    auto quads2 = build_quads(st, snap2, &mod2);
    printf("halved spacing moduli[0]=%.4f ratio=%.3f\n", mod2[0], mod2[0] / mod[0]);
    double siglen = 0;
    for (auto& q : quads) {
      auto s = q.side(1);
      for (size_t i = 1; i < s.size(); ++i) siglen += std::abs(s[i] - s[i - 1]);
    }
    printf("sum sigma len=%.4f midcurve len=%.4f\n", siglen, snap.midcurve.length());
  }

  if (which == 1) {
    // full plain run with log-singular h level 3
    double t0 = now();
    LogSingularResult lsr = make_log_singular_homeo(3, 1);
    printf("make_log_singular t=%.1fs cert valid=%d\n", now() - t0, lsr.cert.valid());
    cfg.h = lsr.h;
    cfg.cert = lsr.cert;
    cfg.steps = 3;
    cfg.mode = WeldMode::plain;
    t0 = now();
    CurveTrace tr = run(cfg);
    printf("run t=%.1fs ok=%d err=%s\n", now() - t0, tr.ok, tr.error.c_str());
    for (auto& m : tr.steps)
      printf("step %d: sup=%.5f ratio=%.4f area=%.4f aratio=%.4f dil=%.5f K=%.5f cumK=%.5f cont=%d t=%.4f\n",
             m.n, m.sup_mismatch, m.mismatch_ratio, m.area, m.area_ratio,
             m.dil_step, m.K_step, m.cum_K, (int)m.containment, m.shrink_t);
    printf("budget=%.4f final_K=%.4f\n", tr.budget_K, tr.final_K);
  }

  if (which == 2) {
    // positive_area
    LogSingularResult lsr = make_log_singular_homeo(3, 1);
    cfg.h = lsr.h;
    cfg.cert = lsr.cert;
    cfg.steps = 3;
    cfg.mode = WeldMode::positive_area;
    cfg.a_seq = {0.75, 0.9375, 0.984375};
    cfg.eps_seq = {0.15, 0.15, 0.25};
    double t0 = now();
    CurveTrace tr = run(cfg);
    printf("run t=%.1fs ok=%d err=%s\n", now() - t0, tr.ok, tr.error.c_str());
    double m0 = 15 * 3.14159265358979, prod = 1;
    for (auto& m : tr.steps) {
      prod *= cfg.a_seq[m.n - 1];
      printf("step %d: area=%.4f aratio=%.5f (target %.5f) ell=%.4f sup=%.5f\n",
             m.n, m.area, m.area_ratio, cfg.a_seq[m.n - 1], m.leftover_used,
             m.sup_mismatch);
    }
    if (!tr.steps.empty())
      printf("final area=%.4f lower bound 0.9*m0*prod=%.4f\n",
             tr.steps.back().area, 0.9 * m0 * prod);
  }

  if (which == 9) {
    for (WeldMode mode : {WeldMode::dim_s, WeldMode::dim_1}) {
      LogSingularResult lsr = make_log_singular_homeo(3, 1);
      cfg.h = lsr.h;
      cfg.cert = lsr.cert;
      cfg.steps = 2;
      cfg.mode = mode;
      cfg.s = 1.5;
      cfg.eps_seq = {9.0, 9.0};
      double t0 = now();
      CurveTrace tr = run(cfg);
      printf("mode=%s run t=%.1fs ok=%d err=%s\n",
             mode == WeldMode::dim_s ? "dim_s" : "dim_1", now() - t0, tr.ok,
             tr.error.c_str());
      for (auto& m : tr.steps)
        printf(
            "step %d: sup=%.5f ratio=%.4f K=%.4f cumK=%.4f cover cost=%.5f "
            "budget=%.5f disks=%lld\n",
            m.n, m.sup_mismatch, m.mismatch_ratio, m.K_step, m.cum_K,
            m.covering_cost, m.covering_budget, m.covering_disks);
    }
  }

  if (which == 7) {
    LogSingularResult lsr = make_log_singular_homeo(3, 1);
    cfg.h = lsr.h; cfg.cert = lsr.cert;
    IterationState st = init(cfg);
    ArcSet E = build_E(16, argc > 2 ? atof(argv[2]) : 3.5, &lsr.cert);
    st.E_used = E;
    SlitMapConfig smc; smc.N = 16; smc.A = 17.0; smc.M = 16;
    SlitDomain sd = slit_map(E, smc);
    ArcSet gaps = arcset_complement(E);
    std::vector<Angle> xs;
    for (const Arc& a : gaps.arcs()) xs.push_back(a.midpoint());
    FoliationSnapshot snap = foliate(st, xs);
    auto quads = build_quads(st, snap);
    ShapeSpec rect;
    {
      Polyline g1, g2;
      g1.vertices = {complexd(0,0), complexd(4,0)};
      g2.vertices = {complexd(0,1), complexd(4,1)};
      rect = shape_from_paths(4.0, g1, g2);
    }
    StepMetrics m;
    IterationState st2 = extend_step(st, sd, {rect}, snap, quads, &m);
    // manual t=0.999 probe: per-E-sample ratios
    IterationState pr = st2;
    for (size_t i = 0; i < pr.f.size(); ++i) {
      if (st2.f_target[i]) pr.f[i] = st2.f[i] + 0.999 * (*st2.f_target[i] - st2.f[i]);
      if (st2.g_target[i]) pr.g[i] = st2.g[i] + 0.999 * (*st2.g_target[i] - st2.g[i]);
    }
    int nmoved_g = 0;
    for (size_t j = 0; j < pr.g.size(); ++j) if (st2.g_target[j]) nmoved_g++;
    printf("moved g samples: %d\n", nmoved_g);
    double worst = 0; size_t iw = 0;
    int over075 = 0, total = 0;
    for (size_t i = 0; i < st.thetas.size(); ++i) {
      if (!E.contains(Angle(st.thetas[i]))) continue;
      if (st.mismatch[i] < 1e-12) continue;
      total++;
      double im = st.h.lift(st.thetas[i]);
      double lnew = std::abs(pr.f[i] - pr.g_at(im));
      double r = lnew / st.mismatch[i];
      if (r > 0.75) over075++;
      if (r > worst) { worst = r; iw = i; }
    }
    printf("E samples=%d over0.75=%d worst=%.4f at i=%zu theta=%.4f\n",
           total, over075, worst, iw, st.thetas[iw]);
    double im = st.h.lift(st.thetas[iw]);
    double stp = kTwoPi / st.thetas.size();
    size_t j0 = (size_t)(wrap_pos(im) / stp);
    printf("h(theta)=%.4f (wrapped %.4f) j0=%zu\n", im, wrap_pos(im), j0);
    for (size_t d = 0; d + 1 <= 4; ++d) {
      size_t j = (j0 + d) % st.thetas.size();
      double tilde = wrap_pos(st.h.inverse_lift(st.thetas[j]));
      printf("  g[%zu] moved=%d tilde=%.4f inE=%d |g|=%.3f->%.3f\n", j,
             (int)(bool)st2.g_target[j], tilde, (int)E.contains(Angle(tilde)),
             std::abs(st2.g[j]), std::abs(pr.g[j]));
    }
    printf("f[%zu] moved=%d |f| %.3f->%.3f target=(%.3f,%.3f)\n", iw,
           (int)(bool)st2.f_target[iw], std::abs(st2.f[iw]), std::abs(pr.f[iw]),
           st2.f_target[iw] ? st2.f_target[iw]->real() : 0.0,
           st2.f_target[iw] ? st2.f_target[iw]->imag() : 0.0);
  }
  if (which == 8) {
    LogSingularResult lsr = make_log_singular_homeo(3, 1);
    cfg.h = lsr.h; cfg.cert = lsr.cert;
    IterationState st = init(cfg);
    ShapeSpec rect;
    {
      Polyline g1, g2;
      g1.vertices = {complexd(0,0), complexd(4,0)};
      g2.vertices = {complexd(0,1), complexd(4,1)};
      rect = shape_from_paths(4.0, g1, g2);
    }
    for (int stepn = 1; stepn <= 2; ++stepn) {
      ArcSet E = build_E(16, 3.5, &lsr.cert);
      st.E_used = E;
      SlitMapConfig smc; smc.N = 16; smc.A = 17.0; smc.M = 16;
      SlitDomain sd = slit_map(E, smc);
      ArcSet gaps = arcset_complement(E);
      std::vector<Angle> xs;
      for (const Arc& a : gaps.arcs()) xs.push_back(a.midpoint());
      printf("step %d: foliate...\n", stepn); fflush(stdout);
      FoliationSnapshot snap = foliate(st, xs);
      printf("  midcurve len=%.3f; leaf0 len=%.3f\n", snap.midcurve.length(),
             snap.leaves[0].length());
      printf("  build_quads...\n"); fflush(stdout);
      std::vector<MarkedQuadrilateral> quads;
      try {
        quads = build_quads(st, snap);
      } catch (const std::exception& e) {
        printf("  build_quads failed: %s\n", e.what());
        // retry one-by-one to find the k
        for (size_t k = 0; k < xs.size(); ++k) {
          std::vector<Angle> sub = xs;  // can't isolate; dump leaves instead
        }
        // dump foliation to file for inspection
        FILE* fp = fopen("/tmp/foliation.txt", "w");
        for (auto& lf : snap.leaves) {
          for (auto& v : lf.vertices) fprintf(fp, "%.6f %.6f ", v.real(), v.imag());
          fprintf(fp, "\n");
        }
        for (auto& v : snap.midcurve.vertices)
          fprintf(fp, "%.6f %.6f ", v.real(), v.imag());
        fprintf(fp, "\n");
        Polyline ib = st.inner_boundary();
        for (auto& v : ib.vertices) fprintf(fp, "%.6f %.6f ", v.real(), v.imag());
        fprintf(fp, "\n");
        fclose(fp);
        return 1;
      }
      StepMetrics m;
      IterationState st2 = extend_step(st, sd, {rect}, snap, quads, &m);
      st = shrink(st2, 2.0/3.0, &m);
      printf("  step done: sup=%.4f ratio=%.4f t=%.4f area=%.3f K=%.4f\n",
             st.sup_mismatch, m.mismatch_ratio, m.shrink_t, st.area, m.K_step);
    }
  }
  if (which == 6) {
    LogSingularResult lsr = make_log_singular_homeo(3, 1);
    for (double a : {3.0, 3.5, 4.0, 4.5, 5.0, 6.0, 8.0}) {
      ArcSet E = build_E(16, a, &lsr.cert);
      printf("A_cert=%.1f arcs=%zu total=%.4f frac=%.3f\n", a, E.arcs().size(),
             E.total_length(), E.total_length() / kTwoPi);
    }
  }
  if (which == 3) {
    printf("astala(1,1.5)=%.4f astala(2,1)=%.4f\n", astala_bound(1, 1.5),
           astala_bound(2, 1));
    std::vector<Disk> d(4, {complexd(0, 0), 0.25});
    printf("covering_cost=%.4f (expect 0.5)\n", covering_cost(d, 1.5));
  }
  if (which == 4) {
    LogSingularResult lsr = make_log_singular_homeo(3, 1);
    cfg.h = lsr.h;
    cfg.cert = lsr.cert;
    IterationState st = init(cfg);
    ArcSet E = build_E(16, argc > 2 ? atof(argv[2]) : 5.0, &lsr.cert);
    printf("E arcs=%zu total=%.4f (frac %.3f)\n", E.arcs().size(),
           E.total_length(), E.total_length() / kTwoPi);
    st.E_used = E;
    SlitMapConfig smc; smc.N = 16; smc.A = 17.0; smc.M = 16;
    SlitDomain sd = slit_map(E, smc);
    ArcSet gaps = arcset_complement(E);
    std::vector<Angle> xs;
    for (const Arc& a : gaps.arcs()) xs.push_back(a.midpoint());
    FoliationSnapshot snap = foliate(st, xs);
    auto quads = build_quads(st, snap);
    StepMetrics m;
    IterationState st2 = extend_step(st, sd, {}, snap, quads, &m);
    return 0;
  }
  if (which == 5) {
    LogSingularResult lsr = make_log_singular_homeo(3, 1);
    cfg.h = lsr.h; cfg.cert = lsr.cert;
    IterationState st = init(cfg);
    ArcSet E = build_E(16, argc > 2 ? atof(argv[2]) : 5.0, &lsr.cert);
    printf("E arcs=%zu total=%.4f (frac %.3f)\n", E.arcs().size(),
           E.total_length(), E.total_length() / kTwoPi);
    int nf = 0, ng = 0;
    for (size_t i = 0; i < st.thetas.size(); ++i) {
      if (E.contains(Angle(st.thetas[i]))) nf++;
      double tilde = st.h.inverse_lift(st.thetas[i]);
      tilde = tilde - kTwoPi * std::floor(tilde / kTwoPi);
      if (E.contains(Angle(tilde))) ng++;
    }
    printf("moved f samples=%d g samples=%d of %zu\n", nf, ng, st.thetas.size());
    st.E_used = E;
    SlitMapConfig smc; smc.N = 16; smc.A = 17.0; smc.M = 16;
    SlitDomain sd = slit_map(E, smc);
    ArcSet gaps = arcset_complement(E);
    std::vector<Angle> xs;
    for (const Arc& a : gaps.arcs()) xs.push_back(a.midpoint());
    FoliationSnapshot snap = foliate(st, xs);
    auto quads = build_quads(st, snap);
    ShapeSpec rect;
    {
      Polyline g1, g2;
      g1.vertices = {complexd(0,0), complexd(4,0)};
      g2.vertices = {complexd(0,1), complexd(4,1)};
      rect = shape_from_paths(4.0, g1, g2);
    }
    StepMetrics m;
    IterationState st2 = extend_step(st, sd, {rect}, snap, quads, &m);
    IterationState st3 = shrink(st2, 2.0/3.0, &m);
    printf("after shrink: sup=%.5f t=%.4f ratio=%.4f area=%.4f\n",
           st3.sup_mismatch, m.shrink_t, m.mismatch_ratio, st3.area);
    // find sup location
    size_t isup = 0;
    for (size_t i = 0; i < st3.mismatch.size(); ++i)
      if (st3.mismatch[i] > st3.mismatch[isup]) isup = i;
    double th = st3.thetas[isup];
    double im = st3.h.lift(th);
    printf("sup at i=%zu theta=%.4f inE=%d old_mis=%.4f new=%.4f\n", isup, th,
           (int)E.contains(Angle(th)), st.mismatch[isup], st3.mismatch[isup]);
    printf("  f_old=(%.3f,%.3f) f_new=(%.3f,%.3f) g_at_h=(%.3f,%.3f)\n",
           st.f[isup].real(), st.f[isup].imag(), st3.f[isup].real(),
           st3.f[isup].imag(), st3.g_at(im).real(), st3.g_at(im).imag());
    // neighbors of h(theta) in g table
    double step = kTwoPi / st3.thetas.size();
    size_t j0 = (size_t)(im / step) % st3.thetas.size();
    for (size_t d = 0; d < 3; ++d) {
      size_t j = (j0 + d) % st3.thetas.size();
      double tilde = st3.h.inverse_lift(st3.thetas[j]);
      tilde -= kTwoPi * std::floor(tilde / kTwoPi);
      printf("  g[%zu]=(%.3f,%.3f) tilde=%.4f inE=%d\n", j, st3.g[j].real(),
             st3.g[j].imag(), tilde, (int)E.contains(Angle(tilde)));
    }
    // histogram of new-boundary radii irregularity
    int selfint = st3.inner_boundary().is_simple() ? 0 : 1;
    printf("inner simple=%d outer simple=%d\n", 1 - selfint,
           st3.outer_boundary().is_simple() ? 1 : 0);
  }
  return 0;
}
