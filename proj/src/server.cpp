#include "fledge/server.hpp"

#include <algorithm>
#include <chrono>

#include "fledge/errors.hpp"

namespace fledge {

using namespace std::chrono_literals;

SocketServer::SocketServer(ServerConfig cfg, const std::vector<DeviceProfile>& fleet,
                           ModelWeights initial_global)
    : cfg_(std::move(cfg)), listener_(cfg_.port),
      engine_(cfg_.engine, fleet, std::move(initial_global)) {}

SocketServer::~SocketServer() {
    {
        std::lock_guard lk(mu_);
        shutting_down_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) {
        if (t.joinable()) t.join();
    }
}

void SocketServer::run() {
    for (int i = 0; i < cfg_.expected_clients; ++i) {
        TcpStream stream = listener_.accept_client();
        threads_.emplace_back([this, s = std::move(stream)]() mutable { session(std::move(s)); });
    }

    std::unique_lock lk(mu_);
    for (;;) {
        bool done = cv_.wait_for(lk, 50ms, [&] {
            return static_cast<int>(records_.size()) >= cfg_.rounds ||
                   (ever_identified_ > 0 && sessions_alive_ == 0 && !directives_);
        });
        // real-time stall guard: give up on missing uploads after the deadline
        if (!done && directives_ && !awaited_.empty() && cfg_.update_deadline_real_s > 0.0) {
            auto waited = std::chrono::steady_clock::now() - plan_time_;
            if (std::chrono::duration<double>(waited).count() > cfg_.update_deadline_real_s) {
                settle_locked();
                cv_.notify_all();
            }
        }
        if (done) break;
    }
    shutting_down_ = true;
    lk.unlock();
    cv_.notify_all();
    listener_.close();
    for (auto& t : threads_) {
        if (t.joinable()) t.join();
    }
    threads_.clear();
}

bool SocketServer::current_round_settled_locked(int round) const {
    return engine_.current_round() > round;
}

void SocketServer::maybe_plan_locked() {
    if (directives_ || contexts_.empty()) return;
    // barrier: every expected client for round 0, every live session after
    int required = ever_identified_ < cfg_.expected_clients ? cfg_.expected_clients : sessions_alive_;
    if (static_cast<int>(contexts_.size()) < required) return;
    std::vector<ContextReport> reports;
    reports.reserve(contexts_.size());
    for (const auto& [id, r] : contexts_) reports.push_back(r);
    directives_ = engine_.plan_current_round(reports);
    plan_time_ = std::chrono::steady_clock::now();
    awaited_.clear();
    updates_.clear();
    if (directives_->plan) {
        for (int id : directives_->plan->chosen) awaited_.insert(id);
    } else {
        settle_locked(); // nothing eligible: the round is skipped right away
    }
}

void SocketServer::settle_locked() {
    if (!directives_) return;
    ServerRoundRecord record;
    record.t = directives_->round;
    if (directives_->plan) {
        const SelectionPlan& plan = *directives_->plan;
        record.chosen = plan.chosen;
        record.epochs = plan.epochs;
        record.m_t_s = plan.time_budget_s;
        for (const auto& u : updates_) {
            int batches = plan.epochs.at(u.client_id) *
                          static_cast<int>(u.n_samples / cfg_.engine.selection.batch_size);
            record.durations_s[u.client_id] = u.batch_time_observed_s * batches;
        }
        record.waiting_s = waiting_from_durations(record.durations_s);
        record.voided = updates_.empty();
    } else {
        record.skipped = true;
    }
    engine_.settle_round(*directives_, updates_);
    record.aggregated = flatten_weights(engine_.global_weights());
    records_.push_back(std::move(record));
    contexts_.clear();
    directives_.reset();
    awaited_.clear();
    updates_.clear();
}

void SocketServer::session(TcpStream stream) {
    int my_id = -1;
    bool counted = false;
    try {
        for (;;) {
            std::optional<RpcMessage> frame = read_frame(stream);
            if (!frame) break; // client done

            switch (frame->type) {
                case MsgType::ContextRequest: {
                    ContextRequestMsg msg = ContextRequestMsg::from_message(*frame);
                    std::unique_lock lk(mu_);
                    if (!counted) {
                        my_id = msg.client_id;
                        ++sessions_alive_;
                        ++ever_identified_;
                        counted = true;
                    }
                    cv_.wait(lk, [&] {
                        return shutting_down_ || engine_.current_round() == msg.round;
                    });
                    if (shutting_down_) return;
                    contexts_[msg.client_id] = {msg.client_id, msg.context, msg.n_samples};
                    maybe_plan_locked();
                    cv_.notify_all();
                    cv_.wait(lk, [&] {
                        return shutting_down_ || directives_.has_value() ||
                               current_round_settled_locked(msg.round);
                    });
                    if (shutting_down_) return;

                    ContextResponseMsg resp;
                    resp.client_id = msg.client_id;
                    resp.round = msg.round;
                    if (directives_ && directives_->round == msg.round && directives_->plan) {
                        const SelectionPlan& plan = *directives_->plan;
                        auto it = plan.epochs.find(msg.client_id);
                        if (it != plan.epochs.end()) {
                            resp.directive = Directive::Selected;
                            resp.epochs = it->second;
                            resp.batch_size = cfg_.engine.selection.batch_size;
                        } else {
                            resp.directive = Directive::Wait;
                        }
                    } else {
                        resp.directive = Directive::RoundSkipped;
                    }
                    lk.unlock();
                    write_frame(stream, resp.to_message());
                    break;
                }
                case MsgType::GlobalWeightsRequest: {
                    GlobalWeightsRequestMsg msg = GlobalWeightsRequestMsg::from_message(*frame);
                    GlobalWeightsResponseMsg resp;
                    resp.client_id = msg.client_id;
                    resp.round = msg.round;
                    {
                        std::lock_guard lk(mu_);
                        resp.manifest = engine_.manifest();
                        resp.weights = flatten_weights(engine_.global_weights());
                    }
                    write_frame(stream, resp.to_message());
                    break;
                }
                case MsgType::UpdateRequest: {
                    UpdateRequestMsg msg = UpdateRequestMsg::from_message(*frame);
                    UpdateResponseMsg resp;
                    resp.client_id = msg.client_id;
                    resp.round = msg.round;
                    std::unique_lock lk(mu_);
                    if (!msg.poll && directives_ && directives_->round == msg.round &&
                        awaited_.count(msg.client_id)) {
                        ClientUpdate u;
                        u.client_id = msg.client_id;
                        u.weights = msg.weights;
                        u.wer = msg.wer;
                        u.n_samples = msg.n_samples;
                        u.batch_time_observed_s = msg.batch_time_observed_s;
                        u.battery_drop_observed_pct = msg.battery_drop_observed_pct;
                        updates_.push_back(std::move(u));
                        awaited_.erase(msg.client_id);
                        if (awaited_.empty()) settle_locked();
                        cv_.notify_all();
                    }
                    // short grace period, then let the client poll again
                    cv_.wait_for(lk, 50ms, [&] {
                        return shutting_down_ || current_round_settled_locked(msg.round);
                    });
                    if (current_round_settled_locked(msg.round)) {
                        const ServerRoundRecord& rec = records_.at(static_cast<size_t>(msg.round));
                        resp.status = rec.voided ? UpdateStatus::Voided : UpdateStatus::Ready;
                        if (resp.status == UpdateStatus::Ready) resp.weights = rec.aggregated;
                    } else {
                        resp.status = UpdateStatus::Pending;
                    }
                    lk.unlock();
                    write_frame(stream, resp.to_message());
                    break;
                }
                default:
                    throw ProtocolError("unexpected frame type on server");
            }
        }
    } catch (const std::exception&) {
        // torn session: fall through to the cleanup below
    }
    std::lock_guard lk(mu_);
    if (counted) --sessions_alive_;
    if (my_id >= 0) {
        contexts_.erase(my_id);
        if (awaited_.erase(my_id) > 0 && awaited_.empty() && directives_) {
            settle_locked(); // dropped client: round proceeds with survivors
        }
        maybe_plan_locked();
    }
    cv_.notify_all();
}

} // namespace fledge
