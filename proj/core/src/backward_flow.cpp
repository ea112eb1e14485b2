#include "vortexscore/backward_flow.hpp"

#include <cmath>
#include <numeric>

#include "vortexscore/error.hpp"
#include "vortexscore/io.hpp"

namespace vortexscore {

DriftField model_drift(const ScoreModel& model) {
    return [&model](std::span<const State> x, int k) { return predict(model, x, k); };
}

State backward_step(const ScoreModel& model, State x_next, int k) {
    const Vec2 v = net_forward(model, x_next, k);
    return x_next + model.grid().dt() * v;
}

ReconstructionResult reconstruct(const DriftField& drift, const TimeGrid& grid, std::span<const State> terminals,
                                 FlowKind domain) {
    ReconstructionResult res;
    res.predicted_x0.assign(terminals.begin(), terminals.end());
    res.source_index.resize(terminals.size());
    std::iota(res.source_index.begin(), res.source_index.end(), std::size_t{0});
    std::vector<bool> flagged(terminals.size(), false);

    const double dt = grid.dt();
    auto& x = res.predicted_x0;
    for (int k = grid.L() - 2; k >= 0; --k) {
        std::vector<Vec2> v;
        try {
            v = drift(x, k);
        } catch (const ModelDivergenceError& e) {
            throw ModelDivergenceError(std::string(e.what()) + " (backward step k = " + std::to_string(k) + ")");
        }
        if (v.size() != x.size()) throw PreconditionError("drift field returned the wrong number of values");
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = x[i] + dt * v[i];
            if (!std::isfinite(x[i].r) || !std::isfinite(x[i].z))
                throw ModelDivergenceError("non-finite reconstruction for terminal " + std::to_string(i) +
                                           " at backward step k = " + std::to_string(k));
            if (domain == FlowKind::Axisymmetric3D && !(x[i].r > 0.0)) flagged[i] = true;
        }
    }
    for (std::size_t i = 0; i < flagged.size(); ++i)
        if (flagged[i]) res.out_of_domain.push_back(i);
    return res;
}

ReconstructionResult reconstruct(const ScoreModel& model, std::span<const State> terminals, FlowKind domain) {
    auto res = reconstruct(model_drift(model), model.grid(), terminals, domain);
    res.model_hash = model_hash(model);
    res.dataset_hash = model.dataset_hash();
    return res;
}

}  // namespace vortexscore
