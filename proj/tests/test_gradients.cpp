#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "contgcn/pipeline.hpp"
#include "support/oracles.hpp"

using namespace contgcn;

namespace {

struct World {
  OmmState omm{0};
  PpmiCache cache;
  DocumentBatch batch;
  std::vector<std::int32_t> labels;
  ModelParams model;
  PipelineOpts opts;

  World(std::size_t u, std::size_t b, std::size_t d, std::size_t h,
        double lambda, std::uint64_t seed)
      : omm(u) {
    std::mt19937_64 rng(seed);
    std::vector<SentenceTokens> docs(u);  // seed the memory densely enough
    for (auto& doc : docs) {
      const std::size_t nsent = 1 + rng() % 3;
      for (std::size_t s = 0; s < nsent; ++s) {
        std::vector<TokenId> sent(2 + rng() % 5);
        for (auto& t : sent) t = static_cast<TokenId>(rng() % u);
        doc.push_back(std::move(sent));
      }
    }
    omm_update(omm, docs);

    std::vector<TokenizedDocument> bdocs;
    for (std::size_t j = 0; j < b; ++j) {
      TokenizedDocument doc;
      doc.token_ids.resize(2 + rng() % 5);
      for (auto& t : doc.token_ids) t = static_cast<TokenId>(rng() % u);
      bdocs.push_back(std::move(doc));
    }
    batch = assemble_batch(std::move(bdocs));
    for (std::size_t j = 0; j < b; ++j)
      labels.push_back(static_cast<std::int32_t>(rng() % 2));

    model = init_model(u, d, h, 2, rng);
    opts.lambda = lambda;
  }

  double loss(bool with_cls, bool with_aic) {
    BatchForward fwd =
        forward_batch(model, {}, cache, omm, batch, opts,
                      /*need_jammed=*/with_aic, /*keep_caches=*/false);
    auto [losses, grads] = batch_losses(model, fwd, labels, opts.lambda,
                                        with_cls, with_aic);
    return losses.total;
  }

  ModelGrads analytic(bool with_cls, bool with_aic) {
    BatchForward fwd =
        forward_batch(model, {}, cache, omm, batch, opts,
                      /*need_jammed=*/with_aic, /*keep_caches=*/true);
    auto [losses, ograds] = batch_losses(model, fwd, labels, opts.lambda,
                                         with_cls, with_aic);
    return backward_batch(model, batch, fwd, ograds, opts.lambda, true);
  }
};

// Compares every entry of every parameter tensor against central
// differences of the end-to-end loss.
void check_all(World& w, bool with_cls, bool with_aic, double tol) {
  ModelGrads grads = w.analytic(with_cls, with_aic);
  auto loss = [&] { return w.loss(with_cls, with_aic); };

  std::vector<std::pair<Matrix*, Matrix*>> tensors;
  w.model.visit([&](const std::string&, Matrix& m, ParamGroup) {
    tensors.push_back({&m, nullptr});
  });
  std::size_t slot = 0;
  grads.visit([&](const std::string&, Matrix& g, ParamGroup) {
    tensors[slot++].second = &g;
  });

  for (auto [param, grad] : tensors)
    for (std::size_t i = 0; i < param->size(); ++i) {
      const double fd = oracles::central_diff(param->data()[i], loss);
      INFO("entry " << i << " analytic=" << grad->data()[i]
                    << " fd=" << fd);
      REQUIRE(oracles::rel_err(grad->data()[i], fd) < tol);
    }
}

}  // namespace

TEST_CASE("classification gradients through the full pipeline") {
  World w(12, 3, 4, 2, 0.05, 21);
  check_all(w, true, false, 1e-4);
}

TEST_CASE("contrastive gradients through the full pipeline") {
  World w(12, 3, 4, 2, 0.05, 22);
  check_all(w, false, true, 1e-4);
}

TEST_CASE("combined objective gradients through the full pipeline") {
  World w(12, 3, 4, 2, 0.07, 23);
  check_all(w, true, true, 1e-4);
}

TEST_CASE("objective gradients distribute linearly in lambda") {
  World w(10, 3, 4, 2, 0.3, 24);
  ModelGrads cls = w.analytic(true, false);
  ModelGrads aic = w.analytic(false, true);
  ModelGrads both = w.analytic(true, true);

  std::vector<Matrix*> t_cls, t_aic, t_both;
  cls.visit([&](const std::string&, Matrix& m, ParamGroup) {
    t_cls.push_back(&m);
  });
  aic.visit([&](const std::string&, Matrix& m, ParamGroup) {
    t_aic.push_back(&m);
  });
  both.visit([&](const std::string&, Matrix& m, ParamGroup) {
    t_both.push_back(&m);
  });
  for (std::size_t s = 0; s < t_both.size(); ++s)
    for (std::size_t i = 0; i < t_both[s]->size(); ++i)
      REQUIRE_THAT(t_both[s]->data()[i],
                   Catch::Matchers::WithinAbs(
                       t_cls[s]->data()[i] + w.opts.lambda * t_aic[s]->data()[i],
                       1e-12));
}

TEST_CASE("gradients stay exact with the dropout hook enabled") {
  // The dropout mask is a fixed function of the seed, so the loss closure
  // is deterministic and finite differences remain valid.
  World w(12, 3, 4, 2, 0.05, 26);
  w.opts.dropout = 0.25;
  w.opts.dropout_seed = 99;
  check_all(w, true, true, 1e-4);
}

TEST_CASE("gradients are identical across worker counts") {
  World w(14, 5, 4, 2, 0.1, 25);
  ModelGrads serial = w.analytic(true, true);
  setenv("CONTGCN_THREADS", "4", 1);
  ModelGrads parallel = w.analytic(true, true);
  unsetenv("CONTGCN_THREADS");

  std::vector<Matrix*> a, b;
  serial.visit([&](const std::string&, Matrix& m, ParamGroup) {
    a.push_back(&m);
  });
  parallel.visit([&](const std::string&, Matrix& m, ParamGroup) {
    b.push_back(&m);
  });
  for (std::size_t s = 0; s < a.size(); ++s) REQUIRE(*a[s] == *b[s]);
}
