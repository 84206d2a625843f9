#include "hpshield/flow.hpp"

#include <stdexcept>

#include "machine.hpp"

namespace hpshield {

struct OdeFlow::Impl {
  detail::Layout layout;
  std::unique_ptr<detail::CompiledOde> ode;
};

OdeFlow::OdeFlow(const Program& program) : impl_(std::make_unique<Impl>()) {
  const auto* o = as<OdeProgram>(program);
  if (!o) throw std::invalid_argument("flow needs a differential-equation program");
  impl_->ode = std::make_unique<detail::CompiledOde>(*o, impl_->layout);
}

OdeFlow::~OdeFlow() = default;
OdeFlow::OdeFlow(OdeFlow&&) noexcept = default;
OdeFlow& OdeFlow::operator=(OdeFlow&&) noexcept = default;

FlowResult OdeFlow::operator()(const State& s, double duration, const FlowOptions& options) const {
  if (!(options.step > 0)) throw std::invalid_argument("integration step must be positive");
  if (!(duration >= 0)) throw std::invalid_argument("flow duration must be non-negative");
  auto& layout = impl_->layout;
  std::vector<double> slots = layout.load(s);

  FlowResult result;
  if (!impl_->ode->domain_holds(slots, layout)) {
    result.state = s;
    result.exit = FlowExit::DomainExit;
    if (options.record) result.trajectory.emplace_back(0.0, s);
    return result;
  }
  detail::FlowSettings settings{options.step, options.event_tolerance, options.record_every};
  std::vector<std::pair<double, std::vector<double>>> raw;
  auto outcome = impl_->ode->flow(slots, layout, duration, settings, options.record ? &raw : nullptr);
  result.state = layout.store(slots);
  result.elapsed = outcome.elapsed;
  result.exit = outcome.domain_exit ? FlowExit::DomainExit : FlowExit::DurationReached;
  for (auto& [t, point] : raw) result.trajectory.emplace_back(t, layout.store(point));
  return result;
}

FlowResult flow(const Program& ode, const State& s, double duration, const FlowOptions& options) {
  return OdeFlow(ode)(s, duration, options);
}

}  // namespace hpshield
