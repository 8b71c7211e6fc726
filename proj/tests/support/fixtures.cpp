#include "fixtures.hpp"

namespace hollow::testing {

Dataset tiny_dataset(const std::string& split, int views, int size) {
    CameraRig rig;
    rig.views = views;
    rig.width = size;
    rig.height = size;
    rig.seed = 3;
    return gen_synthetic(SyntheticScene{}, rig, split, {1.0, 1.0, 1.0}, 64);
}

Config tiny_config(std::int64_t steps) {
    Config cfg = desk_preset();
    cfg.model.hashgrid.log2_table_size = 8;
    cfg.model.hashgrid.levels = 4;
    cfg.model.hashgrid.max_res = 64;
    cfg.model.saliency_res = 4;
    cfg.train.steps = steps;
    cfg.train.rays_per_step = 32;
    cfg.train.samples_per_ray = 8;
    cfg.train.eval_interval = 0;
    cfg.train.eval_views = 1;
    cfg.train.log_interval = 1;
    return cfg;
}

} // namespace hollow::testing
