#include "fledge/client.hpp"

#include <chrono>
#include <thread>

#include "fledge/errors.hpp"
#include "fledge/net.hpp"

namespace fledge {

namespace {

RpcMessage expect_reply(TcpStream& stream) {
    auto reply = read_frame(stream);
    if (!reply) throw IoError("server closed the connection");
    return *reply;
}

} // namespace

std::vector<ClientRoundLog> SocketClient::run() {
    std::vector<ClientRoundLog> logs;
    TcpStream stream = tcp_connect(cfg_.host, cfg_.port);
    ClientRuntime runtime(cfg_.profile, cfg_.experiment_seed, cfg_.datagen);
    if (!cfg_.checkpoint_path.empty()) runtime.set_checkpoint_path(cfg_.checkpoint_path);

    for (int t = 0; t < cfg_.rounds; ++t) {
        ClientRoundLog log;
        log.t = t;

        auto report = runtime.report_context(t);
        if (!report) break; // dead device: phone is off

        ContextRequestMsg ctx;
        ctx.client_id = report->client_id;
        ctx.round = t;
        ctx.context = report->context;
        ctx.n_samples = report->n_samples;
        ctx.status_text = "ready";
        write_frame(stream, ctx.to_message());
        ContextResponseMsg directive = ContextResponseMsg::from_message(expect_reply(stream));
        log.directive = directive.directive;

        if (directive.directive == Directive::Selected) {
            log.epochs = directive.epochs;

            GlobalWeightsRequestMsg get{ctx.client_id, t};
            write_frame(stream, get.to_message());
            GlobalWeightsResponseMsg global =
                GlobalWeightsResponseMsg::from_message(expect_reply(stream));
            ModelWeights weights = load_flat_weights(global.weights, global.manifest);

            ClientRoundExecution exec =
                runtime.execute(weights, directive.epochs, directive.batch_size, t);
            log.elapsed_s = exec.elapsed_s;
            log.died = exec.died;
            if (exec.died) {
                logs.push_back(log);
                return logs; // switched off mid-training
            }
            if (cfg_.time_scale > 0.0) {
                std::this_thread::sleep_for(
                    std::chrono::duration<double>(exec.elapsed_s * cfg_.time_scale));
            }

            UpdateRequestMsg upload;
            upload.client_id = ctx.client_id;
            upload.round = t;
            upload.wer = exec.update->wer;
            upload.n_samples = exec.update->n_samples;
            upload.batch_time_observed_s = exec.update->batch_time_observed_s;
            upload.battery_drop_observed_pct = exec.update->battery_drop_observed_pct;
            upload.weights = exec.update->weights;
            auto upload_instant = std::chrono::steady_clock::now();
            write_frame(stream, upload.to_message());
            UpdateResponseMsg result = UpdateResponseMsg::from_message(expect_reply(stream));
            while (result.status == UpdateStatus::Pending) {
                std::this_thread::sleep_for(std::chrono::duration<double>(cfg_.poll_interval_s));
                UpdateRequestMsg poll;
                poll.client_id = ctx.client_id;
                poll.round = t;
                poll.poll = true;
                write_frame(stream, poll.to_message());
                result = UpdateResponseMsg::from_message(expect_reply(stream));
            }
            log.final_status = result.status;
            log.got_aggregate = result.status == UpdateStatus::Ready;
            log.realized_waiting_wall_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - upload_instant)
                    .count();
        }

        runtime.end_round();
        logs.push_back(log);
    }
    return logs;
}

} // namespace fledge
