#include "accident/fusion/fuse.hpp"

#include "accident/errors.hpp"

namespace accident::fusion {

Fusion::Fusion(ad::ParameterSet& params, const std::string& prefix, const std::string& group,
               const FusionConfig& config, std::mt19937_64& rng)
    : config_(config) {
  const std::size_t in = config.vision_dim + config.object_dim;
  mlp_ = layers::make_mlp(params, prefix + ".mlp", group, {in, config.out_dim, config.out_dim, config.out_dim},
                          false, rng);
}

ad::Var Fusion::operator()(ad::Tape& tape, ad::Var o_v, ad::Var o_b, std::size_t n_objects,
                           const std::vector<std::uint8_t>& mask) const {
  if (n_objects == 0 || o_b.rows() != o_v.rows() * n_objects) {
    throw ShapeError("fusion: frame and object streams disagree on T");
  }
  if (o_v.cols() != config_.vision_dim || o_b.cols() != config_.object_dim) {
    throw ShapeError("fusion: feature width mismatch");
  }
  ad::Var pooled = ad::masked_mean_objects(o_b, n_objects, mask);
  return mlp_(tape, ad::concat_cols(o_v, pooled));
}

}  // namespace accident::fusion
