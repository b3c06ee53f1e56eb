#include "topicshift/cli.hpp"

int main(int argc, char** argv) { return topicshift::run_cli(argc, argv); }
