# CSV / network file persistence
