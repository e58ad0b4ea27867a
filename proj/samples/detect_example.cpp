// Library usage: load a trace, train PADS-A on its benign prefix, calibrate the
// threshold to a 10 % false-positive rate and report what happened.
//
//   pads_sample data/example_trace.jsonl

#include "pads/pads.hpp"

#include <cstdio>

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s TRACE.jsonl\n", argv[0]);
        return 1;
    }
    try {
        const pads::PreparedTrace pt = pads::prepare(pads::load_trace(argv[1]));
        pads::PipelineConfig cfg;
        const auto run = pads::run_at_fpr(pt, pads::Method::pads_a, cfg, 0.10);
        const auto r = pads::count_rates(run.evaluated());
        std::printf("epochs %zu, trained on %zu, gamma %.3f\n", run.outcomes.size(), run.eval_begin, run.gamma);
        std::printf("tpr %.3f fpr %.3f\n", r.tpr, r.fpr);
        for (const auto& o : run.evaluated()) {
            if (o.truth && o.decision) {
                std::printf("first alarm during the attack at t=%.0f s, recovered position off by %.1f m\n", o.t,
                            pads::distance(o.recovered, o.truth_pos));
                break;
            }
        }
    } catch (const pads::Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }
    return 0;
}
